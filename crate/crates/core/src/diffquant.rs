//! Cell-level disagreement between two flow tables over the same industries.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{Cell, FlowMatrix, IndustryCode, SourceTag};
use crate::scalar::{format_scalar, Scalar};

pub const QUANTILE_PROBS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
pub const QUANTILE_CSV_HEADER: &str = "table,25%,50%,75%,100%";
pub const VALUES_CSV_HEADER: &str = "i,j,difference";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DifferenceMetric {
    /// `max(p_a / p_b, p_b / p_a)`, stored linearly.
    Proportional,
    /// `log10(|p_a - p_b| (T_a + T_b) / 2)`, stored as the logarithm.
    ScaledPercentage,
}

impl DifferenceMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proportional" | "prop" => Ok(DifferenceMetric::Proportional),
            "scaled-percentage" | "scaled" | "percent" => Ok(DifferenceMetric::ScaledPercentage),
            other => Err(Error::Usage(format!("unknown difference metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroPolicy {
    BothNonzeroOnly,
    /// Also keep cells positive in exactly one table.
    KeepOneSidedZeros,
}

impl ZeroPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both-nonzero" | "both" => Ok(ZeroPolicy::BothNonzeroOnly),
            "keep-one-sided" | "one-sided" => Ok(ZeroPolicy::KeepOneSidedZeros),
            other => Err(Error::Usage(format!("unknown zero policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceReport<S: Scalar = f64> {
    pub metric: DifferenceMetric,
    pub pair: (SourceTag, SourceTag),
    pub zero_policy: ZeroPolicy,
    pub nodes: Vec<IndustryCode>,
    /// `(i, j, difference)` in the metric's native scale, indices into `nodes`.
    pub values: Vec<(usize, usize, S)>,
    /// Quantiles at [`QUANTILE_PROBS`], on the linear scale for both metrics.
    pub quantiles: [S; 4],
    pub n_pairs: usize,
}

impl<S: Scalar> DifferenceReport<S> {
    pub fn write_values_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{VALUES_CSV_HEADER}")?;
        for &(i, j, d) in &self.values {
            writeln!(w, "{},{},{d}", self.nodes[i], self.nodes[j])?;
        }
        Ok(())
    }

    /// One-row quantile table labelled with the second table's source.
    pub fn write_quantiles_csv<W: Write>(&self, mut w: W, digits: Option<usize>) -> Result<()> {
        writeln!(w, "{QUANTILE_CSV_HEADER}")?;
        let q: Vec<String> = self.quantiles.iter().map(|&v| format_scalar(v, digits)).collect();
        writeln!(w, "{},{}", self.pair.1, q.join(","))?;
        Ok(())
    }

    pub fn quantiles_json(&self) -> serde_json::Value {
        let mut block = serde_json::Map::new();
        block.insert("table".into(), self.pair.1.to_string().into());
        for (label, q) in ["25%", "50%", "75%", "100%"].iter().zip(&self.quantiles) {
            block.insert((*label).into(), serde_json::json!(q.as_f64()));
        }
        block.insert("n_pairs".into(), self.n_pairs.into());
        serde_json::Value::Object(block)
    }
}

/// Linear-interpolation (type 7) empirical quantiles.
pub fn quantile_summary<S: Scalar>(values: &[S], probs: &[S]) -> Result<Vec<S>> {
    if values.is_empty() {
        return Err(Error::Usage("quantiles of an empty sample".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= S::zero() && **p <= S::one())) {
        return Err(Error::Usage(format!("quantile probability {p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let last = sorted.len() - 1;
    Ok(probs
        .iter()
        .map(|&p| {
            let h = p * S::from_count(last);
            let lo = h.floor().to_usize().expect("in range").min(last);
            let hi = (lo + 1).min(last);
            sorted[lo] + (h - S::from_count(lo)) * (sorted[hi] - sorted[lo])
        })
        .collect())
}

/// Cells of `b`, re-keyed onto `a`'s node order.
fn aligned<S: Scalar>(a: &FlowMatrix<S>, b: &FlowMatrix<S>) -> Result<Vec<Vec<S>>> {
    if a.n() != b.n() {
        return Err(Error::Usage(format!("node universes differ in size: {} vs {}", a.n(), b.n())));
    }
    let mut map = Vec::with_capacity(b.n());
    for code in b.nodes() {
        map.push(a.index_of(code).ok_or_else(|| Error::Usage(format!("industry {code} missing from first table")))?);
    }
    let mut dense = vec![vec![S::zero(); a.n()]; a.n()];
    for ((i, j), w) in b.entries() {
        dense[map[i]][map[j]] = w;
    }
    Ok(dense)
}

/// Retained cells with their raw weights in `a` and `b`; cells suppressed in either table are skipped.
fn retained<S: Scalar>(a: &FlowMatrix<S>, b: &FlowMatrix<S>, policy: ZeroPolicy) -> Result<Vec<(Cell, S, S)>> {
    let bd = aligned(a, b)?;
    let b_suppressed: HashSet<Cell> = b
        .suppressed()
        .iter()
        .map(|&(i, j)| (a.index_of(&b.nodes()[i]).expect("aligned"), a.index_of(&b.nodes()[j]).expect("aligned")))
        .collect();
    let skip = |c: &Cell| a.is_suppressed(c.0, c.1) || b_suppressed.contains(c);
    let mut cells = Vec::new();
    for i in 0..a.n() {
        for j in 0..a.n() {
            let (wa, wb) = (a.get(i, j), bd[i][j]);
            let keep = match policy {
                ZeroPolicy::BothNonzeroOnly => wa > S::zero() && wb > S::zero(),
                ZeroPolicy::KeepOneSidedZeros => wa > S::zero() || wb > S::zero(),
            };
            if keep && !skip(&(i, j)) {
                cells.push(((i, j), wa, wb));
            }
        }
    }
    Ok(cells)
}

fn report<S: Scalar>(
    metric: DifferenceMetric,
    a: &FlowMatrix<S>,
    b: &FlowMatrix<S>,
    zero_policy: ZeroPolicy,
    values: Vec<(usize, usize, S)>,
    linear: Vec<S>,
) -> Result<DifferenceReport<S>> {
    let probs = QUANTILE_PROBS.map(S::lit);
    let q = quantile_summary(&linear, &probs)?;
    Ok(DifferenceReport {
        metric,
        pair: (a.source(), b.source()),
        zero_policy,
        nodes: a.nodes().to_vec(),
        n_pairs: values.len(),
        values,
        quantiles: [q[0], q[1], q[2], q[3]],
    })
}

/// How many times larger each common cell's share of the total is in one table than in the other.
///
/// Proportions use totals over the cells positive in both tables only.
pub fn proportional_difference<S: Scalar>(a: &FlowMatrix<S>, b: &FlowMatrix<S>) -> Result<DifferenceReport<S>> {
    let cells = retained(a, b, ZeroPolicy::BothNonzeroOnly)?;
    if cells.is_empty() {
        return Err(Error::Usage("the tables share no positive cells".into()));
    }
    let ta: S = cells.iter().map(|c| c.1).sum();
    let tb: S = cells.iter().map(|c| c.2).sum();
    let values: Vec<(usize, usize, S)> = cells
        .iter()
        .map(|&((i, j), wa, wb)| {
            let (pa, pb) = (wa / ta, wb / tb);
            (i, j, (pa / pb).max(pb / pa))
        })
        .collect();
    let linear = values.iter().map(|v| v.2).collect();
    report(DifferenceMetric::Proportional, a, b, ZeroPolicy::BothNonzeroOnly, values, linear)
}

/// `log10(|p_a - p_b| (T_a + T_b) / 2)` per retained cell; cells with equal proportions are dropped.
///
/// Proportions and totals use the retained cells only.
pub fn scaled_percentage_difference<S: Scalar>(
    a: &FlowMatrix<S>,
    b: &FlowMatrix<S>,
    zero_policy: ZeroPolicy,
) -> Result<DifferenceReport<S>> {
    let cells = retained(a, b, zero_policy)?;
    let ta: S = cells.iter().map(|c| c.1).sum();
    let tb: S = cells.iter().map(|c| c.2).sum();
    if !(ta > S::zero() && tb > S::zero()) {
        return Err(Error::Usage("one table has no retained flows".into()));
    }
    let scale = (ta + tb) / S::lit(2.0);
    let mut values = Vec::new();
    let mut linear = Vec::new();
    for &((i, j), wa, wb) in &cells {
        let gap = (wa / ta - wb / tb).abs() * scale;
        if gap > S::zero() {
            values.push((i, j, gap.log10()));
            linear.push(gap);
        }
    }
    if values.is_empty() {
        return Err(Error::Usage("the tables have identical proportions in every retained cell".into()));
    }
    report(DifferenceMetric::ScaledPercentage, a, b, zero_policy, values, linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{MatrixMeta, Orientation, Scheme, WeightKind};
    use crate::period::PeriodSpan;

    fn matrix(dense: &[Vec<f64>], source: SourceTag) -> FlowMatrix {
        let meta = MatrixMeta {
            span: PeriodSpan::year(2019).unwrap(),
            scheme: Scheme::Cpa105,
            weight_kind: WeightKind::Value,
            orientation: Orientation::SupplierToBuyer,
            source,
        };
        let nodes = (0..dense.len()).map(|k| IndustryCode::new(Scheme::Cpa105, format!("N{k}")).unwrap()).collect();
        FlowMatrix::from_dense(meta, nodes, dense).unwrap()
    }

    #[test]
    fn textbook_quantiles() {
        assert_eq!(quantile_summary(&[4.0, 1.0, 3.0, 2.0], &[0.0, 0.5, 1.0]).unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(quantile_summary(&[7.0], &[0.25, 1.0]).unwrap(), vec![7.0, 7.0]);
        assert_eq!(quantile_summary::<f64>(&[], &[0.5]).unwrap_err().name(), "UsageError");
    }

    #[test]
    fn identical_tables() {
        let d = vec![vec![1.0, 2.0], vec![0.0, 5.0]];
        let r = proportional_difference(&matrix(&d, SourceTag::PaymentValue), &matrix(&d, SourceTag::IxI)).unwrap();
        assert!(r.values.iter().all(|v| v.2 == 1.0));
        assert_eq!(r.quantiles, [1.0; 4]);
        assert_eq!(r.n_pairs, 3);
    }

    #[test]
    fn doubling() {
        let a = matrix(&[vec![2.0, 1.0], vec![1.0, 0.0]], SourceTag::PaymentValue);
        let b = matrix(&[vec![1.0, 1.0], vec![2.0, 0.0]], SourceTag::IxI);
        let r = proportional_difference(&a, &b).unwrap();
        assert_eq!(r.values, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 2.0)]);
    }

    #[test]
    fn totals_over_retained_cells_only() {
        // the (1,1) cell exists only in `a`; including it in a's total would break equality
        let a = matrix(&[vec![1.0, 1.0], vec![1.0, 100.0]], SourceTag::PaymentValue);
        let b = matrix(&[vec![3.0, 3.0], vec![3.0, 0.0]], SourceTag::IxI);
        let r = proportional_difference(&a, &b).unwrap();
        assert_eq!(r.n_pairs, 3);
        assert!(r.values.iter().all(|v| (v.2 - 1.0).abs() < 1e-15));
    }

    #[test]
    fn no_common_cells() {
        let a = matrix(&[vec![1.0, 0.0], vec![0.0, 0.0]], SourceTag::PaymentValue);
        let b = matrix(&[vec![0.0, 1.0], vec![0.0, 0.0]], SourceTag::IxI);
        assert_eq!(proportional_difference(&a, &b).unwrap_err().name(), "UsageError");
    }

    #[test]
    fn scaled_percentage_worksheet() {
        let a =
            [vec![4.0, 1.0, 0.0, 2.0], vec![0.0, 3.0, 5.0, 0.0], vec![1.0, 0.0, 6.0, 2.0], vec![0.0, 2.0, 0.0, 8.0]];
        let b =
            [vec![2.0, 2.0, 1.0, 0.0], vec![0.0, 6.0, 5.0, 0.0], vec![3.0, 0.0, 4.0, 2.0], vec![0.0, 2.0, 0.0, 9.0]];
        let ma = matrix(&a, SourceTag::PaymentValue);
        let mb = matrix(&b, SourceTag::Sut);
        let r = scaled_percentage_difference(&ma, &mb, ZeroPolicy::BothNonzeroOnly).unwrap();
        let keep: Vec<(usize, usize)> =
            (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| a[i][j] > 0.0 && b[i][j] > 0.0).collect();
        let ta: f64 = keep.iter().map(|&(i, j)| a[i][j]).sum();
        let tb: f64 = keep.iter().map(|&(i, j)| b[i][j]).sum();
        let want: Vec<(usize, usize, f64)> = keep
            .iter()
            .map(|&(i, j)| (i, j, ((a[i][j] / ta - b[i][j] / tb).abs() * (ta + tb) / 2.0).log10()))
            .filter(|v| v.2.is_finite())
            .collect();
        assert_eq!(r.values.len(), want.len());
        for (got, want) in r.values.iter().zip(&want) {
            assert_eq!((got.0, got.1), (want.0, want.1));
            assert!((got.2 - want.2).abs() < 1e-12);
        }
        let one_sided = scaled_percentage_difference(&ma, &mb, ZeroPolicy::KeepOneSidedZeros).unwrap();
        assert!(one_sided.values.iter().any(|v| (v.0, v.1) == (0, 2)));
        assert!(one_sided.n_pairs >= r.n_pairs);
    }

    #[test]
    fn minimal_disagreement() {
        let a = matrix(&[vec![1.0, 1.0], vec![1.0, 1.0]], SourceTag::PaymentValue);
        assert_eq!(scaled_percentage_difference(&a, &a, ZeroPolicy::BothNonzeroOnly).unwrap_err().name(), "UsageError");
        // proportions sum to one on both sides, so a disagreement always spans two cells
        let x = matrix(&[vec![1.0, 2.0], vec![0.0, 0.0]], SourceTag::PaymentValue);
        let y = matrix(&[vec![2.0, 1.0], vec![0.0, 0.0]], SourceTag::IxI);
        let r = scaled_percentage_difference(&x, &y, ZeroPolicy::BothNonzeroOnly).unwrap();
        assert_eq!(r.n_pairs, 2);
        assert!(r.values.iter().all(|v| v.2.abs() < 1e-15));
    }

    #[test]
    fn quantile_table_layout() {
        let a = matrix(&[vec![2.0, 1.0], vec![1.0, 0.0]], SourceTag::PaymentValue);
        let b = matrix(&[vec![1.0, 1.0], vec![2.0, 0.0]], SourceTag::IxI);
        let r = proportional_difference(&a, &b).unwrap();
        let mut out = Vec::new();
        r.write_quantiles_csv(&mut out, Some(2)).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "table,25%,50%,75%,100%\nIxI,1.50,2.00,2.00,2.00\n");
        assert_eq!(r.quantiles_json()["50%"], 2.0);
    }
}
