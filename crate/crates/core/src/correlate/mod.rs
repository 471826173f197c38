//! Correlation machinery: Pearson and Spearman coefficients, edge-level and
//! industry-level correlation matrices, growth rates, and growth comovement by
//! network distance.

mod distance;
mod growth;

pub use distance::{
    growth_correlation_by_distance, shortest_path_distances, write_curves_csv, DistanceCorrelationCurve,
    DistanceCurveOptions, DistancePoint, Distances, GrowthPooling, CURVE_CSV_HEADER,
};
pub use growth::{growth_rates, GrowthBasis, GrowthSeries};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{FlowMatrix, SourceTag};
use crate::scalar::Scalar;
use crate::shares::{ShareDirection, ShareMatrix};

/// Product-moment correlation.
///
/// Errors on mismatched lengths or fewer than two points; `Ok(None)` when
/// either input has zero variance.
pub fn pearson<S: Scalar>(xs: &[S], ys: &[S]) -> Result<Option<S>> {
    if xs.len() != ys.len() {
        return Err(Error::Usage(format!("correlation inputs differ in length ({} vs {})", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Usage("correlation needs at least two observations".into()));
    }
    let n = S::from_count(xs.len());
    let mx = xs.iter().copied().sum::<S>() / n;
    let my = ys.iter().copied().sum::<S>() / n;
    let (mut sxy, mut sxx, mut syy) = (S::zero(), S::zero(), S::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= S::zero() || syy <= S::zero() {
        return Ok(None);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(Some(r.max(-S::one()).min(S::one())))
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks<S: Scalar>(xs: &[S]) -> Vec<S> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![S::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mean = S::from_count(start + 1 + end) / S::lit(2.0);
        for &k in &order[start..end] {
            ranks[k] = mean;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman<S: Scalar>(xs: &[S], ys: &[S]) -> Result<Option<S>> {
    if xs.len() != ys.len() {
        return Err(Error::Usage(format!("correlation inputs differ in length ({} vs {})", xs.len(), ys.len())));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    pub fn apply<S: Scalar>(self, xs: &[S], ys: &[S]) -> Result<Option<S>> {
        match self {
            CorrelationMethod::Pearson => pearson(xs, ys),
            CorrelationMethod::Spearman => spearman(xs, ys),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesLabel {
    pub source: SourceTag,
    pub year: i32,
    pub direction: ShareDirection,
}

impl std::fmt::Display for SeriesLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {}", self.source, self.year, self.direction)
    }
}

/// Symmetric matrix of pairwise correlations; `None` marks undefined cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrixReport<S: Scalar = f64> {
    pub labels: Vec<SeriesLabel>,
    pub cells: Vec<Vec<Option<S>>>,
    pub method: CorrelationMethod,
}

impl<S: Scalar> CorrelationMatrixReport<S> {
    fn build(
        labels: Vec<SeriesLabel>,
        method: CorrelationMethod,
        mut pair: impl FnMut(usize, usize) -> Result<Option<S>>,
    ) -> Result<Self> {
        let k = labels.len();
        let mut cells = vec![vec![None; k]; k];
        for a in 0..k {
            for b in a..k {
                let r = pair(a, b)?;
                cells[a][b] = r;
                cells[b][a] = r;
            }
        }
        Ok(CorrelationMatrixReport { labels, cells, method })
    }

    /// CSV with a label column followed by one column per series.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series");
        for l in &self.labels {
            out.push(',');
            out.push_str(&l.to_string());
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.cells) {
            out.push_str(&l.to_string());
            for c in row {
                out.push(',');
                match c {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str(crate::netstats::UNDEFINED),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Collect `(x, y)` over indices where both are defined and correlate them.
fn correlate_defined<S: Scalar>(
    method: CorrelationMethod,
    pairs: impl Iterator<Item = (Option<S>, Option<S>)>,
) -> Result<Option<S>> {
    let (xs, ys): (Vec<S>, Vec<S>) = pairs.filter_map(|(x, y)| Some((x?, y?))).unzip();
    if xs.len() < 2 {
        return Ok(None);
    }
    method.apply(&xs, &ys)
}

/// Pairwise Pearson correlations of share matrices over all `n^2` aligned cells.
///
/// Absent cells count as zero; cells suppressed in either matrix of a pair are dropped.
pub fn edge_share_correlations<S: Scalar>(items: &[(i32, ShareMatrix<S>)]) -> Result<CorrelationMatrixReport<S>> {
    if items.len() < 2 {
        return Err(Error::Usage("edge correlations need at least two share matrices".into()));
    }
    let nodes = items[0].1.nodes();
    if items.iter().any(|(_, m)| m.nodes() != nodes) {
        return Err(Error::Schema("share matrices are not on an identical node universe".into()));
    }
    let n = nodes.len();
    let labels = items
        .iter()
        .map(|(year, m)| SeriesLabel { source: m.source(), year: *year, direction: m.direction() })
        .collect();
    let dense: Vec<Vec<Vec<S>>> = items.iter().map(|(_, m)| m.to_dense()).collect();
    CorrelationMatrixReport::build(labels, CorrelationMethod::Pearson, |a, b| {
        let (ma, mb) = (&items[a].1, &items[b].1);
        let cells = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        let pairs = cells.map(|(i, j)| {
            if ma.suppressed().contains(&(i, j)) || mb.suppressed().contains(&(i, j)) {
                (None, None)
            } else {
                (Some(dense[a][i][j]), Some(dense[b][i][j]))
            }
        });
        correlate_defined(CorrelationMethod::Pearson, pairs)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMode {
    Levels,
    GrowthRates,
}

/// Industry-level correlations of outputs (row sums) and inputs (column sums).
///
/// In `GrowthRates` mode each source's consecutive years `(y - 1, y)` are mapped
/// to per-industry ratios `x(y) / x(y - 1)` first, labelled with year `y`.
pub fn industry_aggregate_correlations<S: Scalar>(
    items: &[(i32, FlowMatrix<S>)],
    mode: AggregateMode,
) -> Result<CorrelationMatrixReport<S>> {
    if items.len() < 2 {
        return Err(Error::Usage("industry correlations need at least two matrices".into()));
    }
    let nodes = items[0].1.nodes();
    if items.iter().any(|(_, m)| m.nodes() != nodes) {
        return Err(Error::Schema("matrices are not on an identical node universe".into()));
    }
    let mut series: Vec<(SeriesLabel, Vec<Option<S>>)> = Vec::new();
    let sums = |m: &FlowMatrix<S>| {
        let m = m.supplier_oriented();
        (m.row_sums(), m.col_sums())
    };
    match mode {
        AggregateMode::Levels => {
            if nodes.len() < 2 {
                return Err(Error::Usage("levels correlations need at least two industries".into()));
            }
            for (year, m) in items {
                let (out, inp) = sums(m);
                let label = |direction| SeriesLabel { source: m.source(), year: *year, direction };
                series.push((label(ShareDirection::Output), out.into_iter().map(Some).collect()));
                series.push((label(ShareDirection::Input), inp.into_iter().map(Some).collect()));
            }
        }
        AggregateMode::GrowthRates => {
            let mut by_source: BTreeMap<SourceTag, BTreeMap<i32, &FlowMatrix<S>>> = BTreeMap::new();
            for (year, m) in items {
                by_source.entry(m.source()).or_default().insert(*year, m);
            }
            let ratio = |now: &[S], before: &[S]| -> Vec<Option<S>> {
                now.iter().zip(before).map(|(&a, &b)| (b > S::zero()).then(|| a / b)).collect()
            };
            for (source, years) in &by_source {
                for (&year, m) in years {
                    let Some(prev) = years.get(&(year - 1)) else { continue };
                    let (out, inp) = sums(m);
                    let (out0, inp0) = sums(prev);
                    let label = |direction| SeriesLabel { source: *source, year, direction };
                    series.push((label(ShareDirection::Output), ratio(&out, &out0)));
                    series.push((label(ShareDirection::Input), ratio(&inp, &inp0)));
                }
            }
            if series.is_empty() {
                return Err(Error::Usage("growth-rate correlations need two consecutive years of one source".into()));
            }
        }
    }
    let labels = series.iter().map(|(l, _)| *l).collect();
    CorrelationMatrixReport::build(labels, CorrelationMethod::Pearson, |a, b| {
        let pairs = series[a].1.iter().copied().zip(series[b].1.iter().copied());
        correlate_defined(CorrelationMethod::Pearson, pairs)
    })
}
