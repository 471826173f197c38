//! Growth comovement as a function of directed network distance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use serde::Serialize;

use super::growth::GrowthBasis;
use super::spearman;
use crate::error::{Error, Result};
use crate::flow::{aggregate_periods, FlowMatrix, IndustryCode, Orientation};
use crate::period::YearMonth;
use crate::scalar::Scalar;
use crate::shares::{truncate, ShareDirection};

/// All-pairs unweighted directed hop counts; unreachable pairs are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distances {
    n: usize,
    hops: Vec<Option<u32>>,
}

impl Distances {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Hops from `i` to `j`; `Some(0)` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.hops[i * self.n + j]
    }
}

/// Breadth-first distances over the stored links of a supplier-oriented matrix.
pub fn shortest_path_distances<S: Scalar>(m: &FlowMatrix<S>) -> Result<Distances> {
    if m.orientation() != Orientation::SupplierToBuyer {
        return Err(Error::Orientation("distances need a supplier-to-buyer matrix".into()));
    }
    let n = m.n();
    let mut out_links = vec![Vec::new(); n];
    for ((i, j), _) in m.entries() {
        if i != j {
            out_links[i].push(j);
        }
    }
    let mut hops = vec![None; n * n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        let row = &mut hops[src * n..(src + 1) * n];
        row[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = row[u].expect("queued nodes have a distance");
            for &v in &out_links[u] {
                if row[v].is_none() {
                    row[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(Distances { n, hops })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthPooling {
    /// One Spearman coefficient over all (pair, month) observations in a bucket.
    Pooled,
    /// Spearman per industry pair and year, averaged within the bucket.
    PerPairMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceCurveOptions {
    pub basis: GrowthBasis,
    pub pooling: GrowthPooling,
    /// Buckets with fewer observations are omitted.
    pub min_pairs: usize,
    /// Pairs farther apart than this are not collected.
    pub max_distance: Option<u32>,
}

impl DistanceCurveOptions {
    pub fn new(basis: GrowthBasis) -> Self {
        DistanceCurveOptions { basis, pooling: GrowthPooling::Pooled, min_pairs: 30, max_distance: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistancePoint<S: Scalar = f64> {
    pub distance: u32,
    pub correlation: S,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceCorrelationCurve<S: Scalar = f64> {
    pub threshold: S,
    pub points: Vec<DistancePoint<S>>,
}

impl<S: Scalar> DistanceCorrelationCurve<S> {
    pub fn at(&self, distance: u32) -> Option<&DistancePoint<S>> {
        self.points.iter().find(|p| p.distance == distance)
    }
}

pub const CURVE_CSV_HEADER: &str = "threshold,distance,correlation,n_pairs";

pub fn write_curves_csv<S: Scalar, W: Write>(curves: &[DistanceCorrelationCurve<S>], mut w: W) -> Result<()> {
    writeln!(w, "{CURVE_CSV_HEADER}")?;
    for c in curves {
        for p in &c.points {
            writeln!(w, "{},{},{},{}", c.threshold, p.distance, p.correlation, p.n_pairs)?;
        }
    }
    Ok(())
}

/// Monthly panel aligned on one node universe, in supplier orientation.
struct Panel<S: Scalar> {
    months: Vec<YearMonth>,
    matrices: Vec<FlowMatrix<S>>,
    /// growth[t][i]: year-over-year ratio of industry i at month t.
    growth: Vec<Vec<Option<S>>>,
}

fn build_panel<S: Scalar>(monthly: &[FlowMatrix<S>], basis: GrowthBasis) -> Result<Panel<S>> {
    for m in monthly {
        if !m.span().is_single_month() {
            return Err(Error::Usage(format!("panel matrix spanning {} is not monthly", m.span())));
        }
        if m.weight_kind() != basis.weight_kind() {
            return Err(Error::Schema(format!("{:?} basis needs {} matrices", basis, basis.weight_kind())));
        }
    }
    let universe: Vec<IndustryCode> =
        monthly.iter().flat_map(|m| m.nodes().iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut sorted: Vec<FlowMatrix<S>> =
        monthly.iter().map(|m| m.supplier_oriented().reindexed(&universe)).collect::<Result<_>>()?;
    sorted.sort_by_key(|m| m.span().start);
    let months: Vec<YearMonth> = sorted.iter().map(|m| m.span().start).collect();
    if months.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Usage("panel contains two matrices for the same month".into()));
    }
    let levels: Vec<Vec<S>> = sorted
        .iter()
        .map(|m| match basis.direction() {
            ShareDirection::Output => m.row_sums(),
            ShareDirection::Input => m.col_sums(),
        })
        .collect();
    let index: BTreeMap<YearMonth, usize> = months.iter().enumerate().map(|(t, &m)| (m, t)).collect();
    let growth = months
        .iter()
        .enumerate()
        .map(|(t, m)| {
            let base = m.offset(-12).ok().and_then(|b| index.get(&b).copied());
            (0..universe.len())
                .map(|i| {
                    let b = levels[base?][i];
                    (b > S::zero()).then(|| levels[t][i] / b)
                })
                .collect()
        })
        .collect();
    Ok(Panel { months, matrices: sorted, growth })
}

/// Spearman correlation of industry growth rates, bucketed by the directed
/// distance between supplier and buyer in each year's truncated annual network.
///
/// For every year with growth observations, that year's months are aggregated,
/// truncated by input share at each threshold, and distances computed; growth
/// observations from the same year are attributed to those distances.
pub fn growth_correlation_by_distance<S: Scalar>(
    monthly: &[FlowMatrix<S>],
    thresholds: &[S],
    opts: DistanceCurveOptions,
) -> Result<Vec<DistanceCorrelationCurve<S>>> {
    let panel = build_panel(monthly, opts.basis)?;
    let n = panel.matrices.first().map(|m| m.n()).unwrap_or(0);
    let mut years: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (t, m) in panel.months.iter().enumerate() {
        if panel.growth[t].iter().any(Option::is_some) {
            years.entry(m.year()).or_default();
        }
    }
    for (t, m) in panel.months.iter().enumerate() {
        if let Some(ts) = years.get_mut(&m.year()) {
            ts.push(t);
        }
    }
    if years.is_empty() {
        return Err(Error::Usage("panel has no year-over-year growth observations (needs 13+ months)".into()));
    }
    let annual: Vec<(Vec<usize>, FlowMatrix<S>)> = years
        .values()
        .map(|ts| {
            let months: Vec<FlowMatrix<S>> = ts.iter().map(|&t| panel.matrices[t].clone()).collect();
            aggregate_periods(&months).map(|a| (ts.clone(), a))
        })
        .collect::<Result<_>>()?;

    let mut curves = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        // bucket -> pooled (x, y) observations, or per-pair coefficients
        let mut pooled: BTreeMap<u32, (Vec<S>, Vec<S>)> = BTreeMap::new();
        let mut per_pair: BTreeMap<u32, Vec<S>> = BTreeMap::new();
        for (ts, network) in &annual {
            let dist = shortest_path_distances(&truncate(network, threshold, ShareDirection::Input)?)?;
            for i in 0..n {
                for j in 0..n {
                    let Some(d) = dist.get(i, j).filter(|&d| d > 0 && opts.max_distance.is_none_or(|m| d <= m)) else {
                        continue;
                    };
                    let obs = ts.iter().filter_map(|&t| Some((panel.growth[t][i]?, panel.growth[t][j]?)));
                    match opts.pooling {
                        GrowthPooling::Pooled => {
                            let bucket = pooled.entry(d).or_default();
                            for (x, y) in obs {
                                bucket.0.push(x);
                                bucket.1.push(y);
                            }
                        }
                        GrowthPooling::PerPairMean => {
                            let (xs, ys): (Vec<S>, Vec<S>) = obs.unzip();
                            if xs.len() >= 3 {
                                if let Some(r) = spearman(&xs, &ys)? {
                                    per_pair.entry(d).or_default().push(r);
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut points = Vec::new();
        match opts.pooling {
            GrowthPooling::Pooled => {
                for (distance, (xs, ys)) in pooled {
                    if xs.len() < opts.min_pairs.max(2) {
                        continue;
                    }
                    if let Some(correlation) = spearman(&xs, &ys)? {
                        points.push(DistancePoint { distance, correlation, n_pairs: xs.len() });
                    }
                }
            }
            GrowthPooling::PerPairMean => {
                for (distance, rs) in per_pair {
                    if rs.len() < opts.min_pairs.max(1) {
                        continue;
                    }
                    let correlation = rs.iter().copied().sum::<S>() / S::from_count(rs.len());
                    points.push(DistancePoint { distance, correlation, n_pairs: rs.len() });
                }
            }
        }
        curves.push(DistanceCorrelationCurve { threshold, points });
    }
    Ok(curves)
}
