//! Run manifests: what a command read, how it was parameterised, and what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use iotnet::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation. The timestamp lives only here, so data outputs of
/// runs with identical inputs and parameters are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<InputFile>,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            tool_version: TOOL_VERSION.to_string(),
            seed: None,
            outputs: Vec::new(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    /// Read `path` in full, hashing it into the manifest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputFile { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(bytes)
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
        fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Write the manifest beside the first output as `<stem>.manifest.json`.
    pub fn finish(&self, out_dir: &Path) -> Result<PathBuf> {
        let stem = self
            .outputs
            .first()
            .and_then(|p| Path::new(p).file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| self.command.clone());
        let path = out_dir.join(format!("{stem}.manifest.json"));
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
        fs::write(&path, json).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Seed for randomized commands run without `--seed`; recorded in the manifest.
pub fn fresh_seed() -> u64 {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    (nanos as u64) ^ ((nanos >> 64) as u64) ^ u64::from(std::process::id()).rotate_left(32)
}
