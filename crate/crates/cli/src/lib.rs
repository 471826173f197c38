//! Command-line front end: one subcommand per analysis stage.
//!
//! Every run writes its data files plus a `<stem>.manifest.json` into the output
//! directory (`--out-dir`, else `IOTNET_OUT_DIR`, else the working directory).

mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const OUT_DIR_ENV: &str = "IOTNET_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "iotnet", version, about = "Input-output tables from inter-industry payment flows")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Directory for outputs and manifests.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    /// Fixed decimals in summary tables; shortest round-trip form when omitted.
    #[arg(long, global = true)]
    pub digits: Option<usize>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse flow records, map codes and aggregate a matrix over a span.
    Build(BuildArgs),
    /// Network statistics of matrices, optionally after truncation.
    Stats(StatsArgs),
    /// Correlations across tables, industries or network distance.
    #[command(subcommand)]
    Correlate(CorrelateCommand),
    /// Katz-Bonacich influence vector with its CCDF and top industries.
    Centrality(CentralityArgs),
    /// Power-law tail fit with bootstrap goodness of fit.
    Plfit(PlfitArgs),
    /// Cell-level differences between two tables.
    Diff(DiffArgs),
    /// Payment totals against macroeconomic indicators.
    Macro(MacroArgs),
    /// Synthetic payment network and monthly panel as a flows CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub flows: PathBuf,
    /// `sic_prefix,cpa_code` CSV; records are mapped onto CPA codes.
    #[arg(long, conflicts_with = "division_concordance")]
    pub concordance: Option<PathBuf>,
    /// Map five-digit SIC codes onto their two-digit divisions.
    #[arg(long)]
    pub division_concordance: bool,
    /// Send codes without a rule to UNCLASSIFIED instead of failing.
    #[arg(long)]
    pub unclassified: bool,
    /// Scheme of the codes after any mapping.
    #[arg(long, default_value = "sic5")]
    pub scheme: String,
    /// `YYYY`, `YYYY-MM`, `YYYY:YYYY` or `YYYY-MM:YYYY-MM`.
    #[arg(long)]
    pub span: String,
    #[arg(long, default_value = "value")]
    pub weight: String,
    /// Source tag recorded in the matrix.
    #[arg(long)]
    pub source: Option<String>,
    /// Output path, relative to the output directory; defaults to `build_<span>_<weight>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "matrix", required = true)]
    pub matrices: Vec<PathBuf>,
    /// Truncation thresholds; one report row per matrix and threshold.
    #[arg(long = "threshold", default_values_t = [0.0])]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value = "input")]
    pub by: String,
}

#[derive(Debug, Subcommand)]
pub enum CorrelateCommand {
    /// Pearson correlations of share matrices over all cells.
    Edges {
        #[arg(long = "matrix", required = true)]
        matrices: Vec<PathBuf>,
        #[arg(long, default_value = "input")]
        by: String,
    },
    /// Correlations of industry outputs and inputs, in levels or growth rates.
    Industry {
        #[arg(long = "matrix", required = true)]
        matrices: Vec<PathBuf>,
        #[arg(long, default_value = "levels")]
        mode: String,
    },
    /// Spearman correlation of industry growth by network distance.
    Distance {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long, default_value = "outputs-value")]
        basis: String,
        #[arg(long = "threshold", default_values_t = [0.0])]
        thresholds: Vec<f64>,
        #[arg(long, default_value = "pooled")]
        pooling: String,
        #[arg(long, default_value_t = 30)]
        min_pairs: usize,
        #[arg(long)]
        max_distance: Option<u32>,
    },
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = iotnet::centrality::DEFAULT_LABOUR_SHARE)]
    pub alpha_l: f64,
    /// Input-share truncation applied before the shares are formed.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value = "direct")]
    pub solver: String,
    /// Make industries without inputs their own supplier.
    #[arg(long)]
    pub self_loop_repair: bool,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct PlfitArgs {
    /// Matrix whose influence vector is fitted.
    #[arg(long, required_unless_present = "values", conflicts_with = "values")]
    pub matrix: Option<PathBuf>,
    /// CSV with a single `value` column to fit directly.
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long, default_value_t = iotnet::centrality::DEFAULT_LABOUR_SHARE)]
    pub alpha_l: f64,
    /// Drop flows below this quantile of cell values before computing centrality.
    #[arg(long)]
    pub drop_quantile: Option<f64>,
    #[arg(long, default_value_t = iotnet::powerlaw::DEFAULT_BOOTSTRAP_REPS)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "proportional")]
    pub metric: String,
    #[arg(long, default_value = "both-nonzero")]
    pub zero_policy: String,
}

#[derive(Debug, Args)]
pub struct MacroArgs {
    /// Flows CSV; every month present becomes one Value and one Count matrix.
    #[arg(long)]
    pub flows: PathBuf,
    /// Monthly indicator as `NAME=PATH` (`date,value` CSV).
    #[arg(long = "monthly")]
    pub monthly: Vec<String>,
    /// Annual indicator as `NAME=PATH`.
    #[arg(long = "annual")]
    pub annual: Vec<String>,
    #[arg(long)]
    pub covid_exclude: bool,
    /// Add a row with annual payments over each indicator's total for this year.
    #[arg(long)]
    pub share_year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    #[arg(long, default_value_t = 48)]
    pub months: usize,
    #[arg(long, default_value = "2016-01")]
    pub start: String,
    #[arg(long, default_value_t = 0.5)]
    pub persistence: f64,
    #[arg(long, default_value_t = 0.6)]
    pub damping: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub suppression: f64,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_ANALYSIS
            }
        }
    }
}
