use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{IndustryCode, WeightKind};
use crate::period::Period;
use crate::scalar::Scalar;
use crate::shares::ShareDirection;

/// Which industry aggregate a growth series tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GrowthBasis {
    InputsValue,
    InputsCount,
    OutputsValue,
    OutputsCount,
}

impl GrowthBasis {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "inputs-value" => Ok(GrowthBasis::InputsValue),
            "inputs-count" => Ok(GrowthBasis::InputsCount),
            "outputs-value" => Ok(GrowthBasis::OutputsValue),
            "outputs-count" => Ok(GrowthBasis::OutputsCount),
            other => Err(Error::Usage(format!("unknown growth basis {other:?}"))),
        }
    }

    pub fn weight_kind(self) -> WeightKind {
        match self {
            GrowthBasis::InputsValue | GrowthBasis::OutputsValue => WeightKind::Value,
            GrowthBasis::InputsCount | GrowthBasis::OutputsCount => WeightKind::Count,
        }
    }

    /// Outputs are row sums of the supplier-oriented matrix, inputs column sums.
    pub fn direction(self) -> ShareDirection {
        match self {
            GrowthBasis::InputsValue | GrowthBasis::InputsCount => ShareDirection::Input,
            GrowthBasis::OutputsValue | GrowthBasis::OutputsCount => ShareDirection::Output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSeries<S: Scalar = f64> {
    pub industry: IndustryCode,
    pub basis: GrowthBasis,
    /// Only periods with a defined growth ratio.
    pub points: Vec<(Period, S)>,
}

/// Year-over-year growth as a `1 + percentage growth` ratio.
///
/// Monthly points compare with the same month one year earlier, annual points
/// with the previous year. Points whose base is missing or not positive are
/// omitted.
pub fn growth_rates<S: Scalar>(points: &[(Period, S)]) -> Vec<(Period, S)> {
    let by_period: BTreeMap<Period, S> = points.iter().copied().collect();
    by_period
        .iter()
        .filter_map(|(&p, &v)| {
            let base = *by_period.get(&p.year_before()?)?;
            (base > S::zero()).then(|| (p, v / base))
        })
        .collect()
}
