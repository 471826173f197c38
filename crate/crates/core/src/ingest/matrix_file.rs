//! JSON interchange format for flow matrices.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowMatrix, IndustryCode, MatrixMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellWeight {
    pub row: String,
    pub col: String,
    pub weight: f64,
}

/// On-disk layout: metadata, node codes, and cells keyed by code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub meta: MatrixMeta,
    pub nodes: Vec<String>,
    pub entries: Vec<CellWeight>,
    #[serde(default)]
    pub suppressed: Vec<(String, String)>,
    #[serde(default)]
    pub partial: Vec<(String, String)>,
}

impl From<&FlowMatrix> for MatrixFile {
    fn from(m: &FlowMatrix) -> Self {
        let name = |i: usize| m.nodes()[i].to_string();
        MatrixFile {
            meta: *m.meta(),
            nodes: m.nodes().iter().map(|c| c.to_string()).collect(),
            entries: m.entries().map(|((i, j), w)| CellWeight { row: name(i), col: name(j), weight: w }).collect(),
            suppressed: m.suppressed().iter().map(|&(i, j)| (name(i), name(j))).collect(),
            partial: m.partial().iter().map(|&(i, j)| (name(i), name(j))).collect(),
        }
    }
}

impl TryFrom<MatrixFile> for FlowMatrix {
    type Error = Error;

    fn try_from(f: MatrixFile) -> Result<Self> {
        let nodes = f.nodes.iter().map(|c| IndustryCode::new(f.meta.scheme, c.as_str())).collect::<Result<Vec<_>>>()?;
        let lookup: std::collections::HashMap<&str, usize> =
            f.nodes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let index = |code: &str| {
            lookup.get(code).copied().ok_or_else(|| Error::Validation(format!("cell references unknown node {code}")))
        };
        let cell = |r: &str, c: &str| -> Result<(usize, usize)> { Ok((index(r)?, index(c)?)) };
        let entries =
            f.entries.iter().map(|e| cell(&e.row, &e.col).map(|c| (c, e.weight))).collect::<Result<Vec<_>>>()?;
        let suppressed = f.suppressed.iter().map(|(r, c)| cell(r, c)).collect::<Result<Vec<_>>>()?;
        let partial = f.partial.iter().map(|(r, c)| cell(r, c)).collect::<Result<Vec<_>>>()?;
        FlowMatrix::from_parts(f.meta, nodes, entries, suppressed, partial)
    }
}

pub fn write_matrix<W: Write>(m: &FlowMatrix, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &MatrixFile::from(m)).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_matrix<R: Read>(reader: R) -> Result<FlowMatrix> {
    let file: MatrixFile =
        serde_json::from_reader(reader).map_err(|e| Error::Parse { line: e.line() as u64, message: e.to_string() })?;
    FlowMatrix::try_from(file)
}
