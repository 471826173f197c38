//! Input-output tables reconstructed from inter-industry payment flows.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom of this file fix the precision for callers that do not care.

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod centrality;
pub mod correlate;
pub mod diffquant;
pub mod error;
pub mod flow;
pub mod ingest;
mod linalg;
pub mod macrobench;
pub mod netstats;
pub mod period;
pub mod powerlaw;
pub mod scalar;
pub mod shares;
pub mod synth;

pub use error::{Error, Result};
pub use flow::{
    aggregate_periods, build_matrix, Cell, FlowMatrix, FlowRecord, IndustryCode, MatrixMeta, Measured, Orientation,
    Scheme, SourceTag, WeightKind,
};
pub use period::{Frequency, Period, PeriodSpan, YearMonth};
pub use scalar::Scalar;
pub use shares::{input_shares, output_shares, share_matrix, truncate, ShareDirection, ShareMatrix};

pub type FlowMatrix64 = flow::FlowMatrix<f64>;
pub type FlowMatrix32 = flow::FlowMatrix<f32>;
pub type ShareMatrix64 = shares::ShareMatrix<f64>;
pub type ShareMatrix32 = shares::ShareMatrix<f32>;
pub type InfluenceVector64 = centrality::InfluenceVector<f64>;
pub type InfluenceVector32 = centrality::InfluenceVector<f32>;
pub type PowerLawFit64 = powerlaw::PowerLawFit<f64>;
pub type PowerLawFit32 = powerlaw::PowerLawFit<f32>;
pub type DifferenceReport64 = diffquant::DifferenceReport<f64>;
pub type DifferenceReport32 = diffquant::DifferenceReport<f32>;
