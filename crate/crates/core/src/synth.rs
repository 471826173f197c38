//! Seeded synthetic payment networks and growth panels.
//!
//! Randomness comes from ChaCha8 seeded with `seed`; each draw family uses its own
//! stream `purpose << 32 | index`, so per-industry draws do not depend on the
//! order in which industries are processed.

use std::collections::BTreeSet;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    FlowMatrix, FlowRecord, IndustryCode, MatrixMeta, Measured, Orientation, Scheme, SourceTag, WeightKind,
};
use crate::period::{PeriodSpan, YearMonth};

const STREAM_STRENGTH: u64 = 1;
const STREAM_EDGES: u64 = 2;
const STREAM_WEIGHTS: u64 = 3;
const STREAM_COUNTS: u64 = 4;
const STREAM_SHOCKS: u64 = 5;
const STREAM_SUPPRESSION: u64 = 6;
const STREAM_PANEL_COUNTS: u64 = 7;

/// Money units per unit of drawn strength.
const VALUE_SCALE: f64 = 1000.0;
const MIN_VALUE: f64 = 0.01;
/// Log-normal parameters of the average value per transaction.
const AVG_VALUE_MU: f64 = 3.0;
const AVG_VALUE_SIGMA: f64 = 1.0;
/// Months simulated and discarded before the panel starts.
const BURN_IN: usize = 36;
pub const MIN_PANEL_MONTHS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_industries: usize,
    pub seed: u64,
    /// Exponent of the Pareto density of supplier out-strengths.
    pub strength_tail_gamma: f64,
    /// Stored links over `n^2`.
    pub edge_density_target: f64,
    pub months: usize,
    pub start: YearMonth,
    /// AR(1) coefficient of industry log-output.
    pub shock_persistence: f64,
    /// Weight on suppliers' previous-month shocks.
    pub propagation_damping: f64,
    /// Standard deviation of idiosyncratic monthly shocks.
    pub noise_scale: f64,
    /// Probability that an exported record is suppressed.
    pub suppression_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_industries: 200,
            seed: 0,
            strength_tail_gamma: 1.5,
            edge_density_target: 0.05,
            months: 48,
            start: YearMonth::new(2016, 1).expect("valid month"),
            shock_persistence: 0.5,
            propagation_damping: 0.6,
            noise_scale: 0.05,
            suppression_rate: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_industries;
        let fail = |m: String| Err(Error::Usage(m));
        if !(2..=89_999).contains(&n) {
            return fail(format!("n_industries {n} outside 2..=89999"));
        }
        if !(self.strength_tail_gamma > 1.0 && self.strength_tail_gamma.is_finite()) {
            return fail(format!("strength_tail_gamma {} must exceed 1", self.strength_tail_gamma));
        }
        let d = self.edge_density_target;
        if !(d > 0.0 && d <= 1.0) {
            return fail(format!("edge density target {d} outside (0, 1]"));
        }
        if self.target_edges() < 2 * n {
            return fail(format!("edge density target {d} leaves fewer than two links per industry"));
        }
        if !(0.0..1.0).contains(&self.shock_persistence) {
            return fail(format!("shock_persistence {} outside [0, 1)", self.shock_persistence));
        }
        if !(0.0..1.0).contains(&self.propagation_damping) {
            return fail(format!("propagation_damping {} outside [0, 1)", self.propagation_damping));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return fail(format!("noise_scale {} must be positive", self.noise_scale));
        }
        if !(0.0..=1.0).contains(&self.suppression_rate) {
            return fail(format!("suppression_rate {} outside [0, 1]", self.suppression_rate));
        }
        Ok(())
    }

    pub fn target_edges(&self) -> usize {
        (self.edge_density_target * (self.n_industries * self.n_industries) as f64).round() as usize
    }

    fn rng(&self, purpose: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(purpose << 32 | index);
        rng
    }
}

/// Value and Count matrices over the same period, in payer-to-payee orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCount {
    pub value: FlowMatrix,
    pub count: FlowMatrix,
}

pub fn industry_codes(n: usize) -> Vec<IndustryCode> {
    (0..n).map(|i| IndustryCode::new(Scheme::Sic5, format!("{:05}", 10_000 + i)).expect("five digits")).collect()
}

fn meta(span: PeriodSpan, kind: WeightKind) -> MatrixMeta {
    MatrixMeta {
        span,
        scheme: Scheme::Sic5,
        weight_kind: kind,
        orientation: Orientation::PayerToPayee,
        source: SourceTag::payment(kind),
    }
}

fn pennies(x: f64) -> f64 {
    ((x * 100.0).round() / 100.0).max(MIN_VALUE)
}

/// Pareto out-strengths, one per supplier.
fn strengths(cfg: &SynthConfig) -> Vec<f64> {
    let mut rng = cfg.rng(STREAM_STRENGTH, 0);
    let shape = 1.0 / (cfg.strength_tail_gamma - 1.0);
    (0..cfg.n_industries).map(|_| (1.0 - rng.random::<f64>()).powf(-shape)).collect()
}

/// Supplier-to-buyer links. Every industry first sells to one buyer drawn
/// uniformly (stream `i`). The remaining `target - n` links are spread evenly over
/// buyers (the first `(target - n) mod n` take one extra); buyer `j` draws its
/// share without replacement and proportionally to strength, using
/// exponential-race keys `ln(u) / strength` on stream `n + j`.
fn links(cfg: &SynthConfig, strength: &[f64]) -> BTreeSet<(usize, usize)> {
    let n = cfg.n_industries;
    let extra = cfg.target_edges() - n;
    let mut set = BTreeSet::new();
    for supplier in 0..n {
        let mut rng = cfg.rng(STREAM_EDGES, supplier as u64);
        set.insert((supplier, rng.random_range(0..n)));
    }
    for buyer in 0..n {
        let want = extra / n + usize::from(buyer < extra % n);
        let mut rng = cfg.rng(STREAM_EDGES, (n + buyer) as u64);
        let mut keys: Vec<(f64, usize)> =
            strength.iter().enumerate().map(|(i, &s)| ((1.0 - rng.random::<f64>()).ln() / s, i)).collect();
        keys.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let fresh: Vec<usize> =
            keys.iter().map(|&(_, i)| i).filter(|&i| !set.contains(&(i, buyer))).take(want).collect();
        set.extend(fresh.into_iter().map(|i| (i, buyer)));
    }
    set
}

/// Heavy-tailed base network for the first month of `cfg`.
pub fn generate_network(cfg: &SynthConfig) -> Result<ValueCount> {
    cfg.validate()?;
    let n = cfg.n_industries;
    let strength = strengths(cfg);
    let links = links(cfg, &strength);
    let mut by_supplier = vec![Vec::new(); n];
    for &(i, j) in &links {
        by_supplier[i].push(j);
    }
    let avg_value = LogNormal::new(AVG_VALUE_MU, AVG_VALUE_SIGMA).expect("valid log-normal");
    let mut values = Vec::with_capacity(links.len());
    let mut counts = Vec::with_capacity(links.len());
    for (i, buyers) in by_supplier.iter().enumerate() {
        let mut wr = cfg.rng(STREAM_WEIGHTS, i as u64);
        let mut cr = cfg.rng(STREAM_COUNTS, i as u64);
        let draws: Vec<f64> = buyers.iter().map(|_| wr.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        for (&j, e) in buyers.iter().zip(draws) {
            let z = pennies(strength[i] * VALUE_SCALE * e / total);
            let c = (z / avg_value.sample(&mut cr)).round().max(1.0);
            // payer (buyer) row, payee (supplier) column
            values.push(((j, i), z));
            counts.push(((j, i), c));
        }
    }
    let span = PeriodSpan::month(cfg.start);
    let nodes = industry_codes(n);
    Ok(ValueCount {
        value: FlowMatrix::from_parts(meta(span, WeightKind::Value), nodes.clone(), values, [], [])?,
        count: FlowMatrix::from_parts(meta(span, WeightKind::Count), nodes, counts, [], [])?,
    })
}

/// Monthly panel: `x_i(t) = rho x_i(t-1) + s_i(t)` with shocks
/// `s_i(t) = e_i(t) + damping * mean_{k supplies i} s_k(t-1)`. Idiosyncratic shocks
/// `e_i` have standard deviation `noise_scale / sqrt(q_i)`, `q_i` the out-strength
/// relative to the smallest positive one, so large industries are less volatile.
/// Month `t` scales supplier `i`'s base sales by `exp(x_i(t))`.
pub fn generate_growth_panel(network: &ValueCount, cfg: &SynthConfig) -> Result<Vec<ValueCount>> {
    cfg.validate()?;
    if cfg.months < MIN_PANEL_MONTHS {
        return Err(Error::Usage(format!("growth panel needs at least {MIN_PANEL_MONTHS} months, got {}", cfg.months)));
    }
    let base = network.value.supplier_oriented();
    let n = base.n();
    let mut suppliers = vec![Vec::new(); n];
    for ((k, i), _) in base.entries() {
        suppliers[i].push(k);
    }
    let out = base.row_sums();
    let smallest = out.iter().copied().filter(|&o| o > 0.0).fold(f64::INFINITY, f64::min);
    let sd: Vec<f64> = out.iter().map(|&o| cfg.noise_scale / (o / smallest).max(1.0).sqrt()).collect();
    let mut shock_rngs: Vec<ChaCha8Rng> = (0..n).map(|i| cfg.rng(STREAM_SHOCKS, i as u64)).collect();
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut levels = Vec::with_capacity(cfg.months);
    for t in 0..BURN_IN + cfg.months {
        let prev = s.clone();
        for i in 0..n {
            let eps: f64 = shock_rngs[i].sample::<f64, _>(StandardNormal) * sd[i];
            let spill = if suppliers[i].is_empty() {
                0.0
            } else {
                suppliers[i].iter().map(|&k| prev[k]).sum::<f64>() / suppliers[i].len() as f64
            };
            s[i] = eps + cfg.propagation_damping * spill;
            x[i] = cfg.shock_persistence * x[i] + s[i];
        }
        if t >= BURN_IN {
            levels.push(x.clone());
        }
    }

    let base_counts = network.count.supplier_oriented();
    let nodes = network.value.nodes().to_vec();
    levels
        .iter()
        .enumerate()
        .map(|(t, x)| {
            let ym = cfg.start.offset(t as i64)?;
            let span = PeriodSpan::month(ym);
            let mut cr = cfg.rng(STREAM_PANEL_COUNTS, t as u64);
            let mut values = Vec::with_capacity(base.n_edges());
            let mut counts = Vec::with_capacity(base.n_edges());
            for ((i, j), z) in base.entries() {
                let factor = x[i].exp();
                let jitter = 1.0 + 0.1 * (cr.random::<f64>() - 0.5);
                values.push(((j, i), pennies(z * factor)));
                counts.push(((j, i), (base_counts.get(i, j) * factor * jitter).round().max(1.0)));
            }
            Ok(ValueCount {
                value: FlowMatrix::from_parts(meta(span, WeightKind::Value), nodes.clone(), values, [], [])?,
                count: FlowMatrix::from_parts(meta(span, WeightKind::Count), nodes.clone(), counts, [], [])?,
            })
        })
        .collect()
}

/// Flow records of a single-month pair, in payer/payee cell order.
pub fn to_records(pair: &ValueCount) -> Result<Vec<FlowRecord>> {
    let (v, c) = (&pair.value, &pair.count);
    if !v.span().is_single_month() || v.span() != c.span() {
        return Err(Error::Usage("records need a value and count matrix for one month".into()));
    }
    if v.orientation() != Orientation::PayerToPayee || c.orientation() != Orientation::PayerToPayee {
        return Err(Error::Orientation("records need payer-to-payee matrices".into()));
    }
    let cells: BTreeSet<(usize, usize)> = v.entries().map(|e| e.0).chain(c.entries().map(|e| e.0)).collect();
    Ok(cells
        .into_iter()
        .map(|(i, j)| FlowRecord {
            period: v.span().start,
            payer: v.nodes()[i].clone(),
            payee: v.nodes()[j].clone(),
            value: Measured::Observed(v.get(i, j)),
            count: Measured::Observed(c.get(i, j).round() as u64),
        })
        .collect())
}

/// Suppress each record's value and count independently with probability `rate`.
pub fn suppress_records(records: &mut [FlowRecord], rate: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_SUPPRESSION << 32);
    for r in records {
        if rng.random::<f64>() < rate {
            r.value = Measured::Suppressed;
        }
        if rng.random::<f64>() < rate {
            r.count = Measured::Suppressed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{aggregate_periods, build_matrix};

    fn small() -> SynthConfig {
        SynthConfig { n_industries: 50, edge_density_target: 0.1, seed: 17, months: 24, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_network(&small()).unwrap(), generate_network(&small()).unwrap());
        let other = SynthConfig { seed: 18, ..small() };
        assert_ne!(generate_network(&small()).unwrap(), generate_network(&other).unwrap());
        let net = generate_network(&small()).unwrap();
        assert_eq!(generate_growth_panel(&net, &small()).unwrap(), generate_growth_panel(&net, &small()).unwrap());
    }

    #[test]
    fn density_on_target() {
        for (n, d) in [(50, 0.1), (200, 0.05)] {
            let cfg = SynthConfig { n_industries: n, edge_density_target: d, ..small() };
            let net = generate_network(&cfg).unwrap();
            let realised = net.value.n_edges() as f64 / (n * n) as f64;
            assert!((realised - d).abs() <= 0.1 * d, "{realised}");
        }
    }

    #[test]
    fn shared_support_and_full_buyers() {
        let net = generate_network(&small()).unwrap();
        let v: Vec<_> = net.value.entries().map(|e| e.0).collect();
        let c: Vec<_> = net.count.entries().map(|e| e.0).collect();
        assert_eq!(v, c);
        // every payer row is non-empty
        assert!(net.value.row_sums().iter().all(|&r| r > 0.0));
    }

    #[test]
    fn infeasible_configs() {
        for bad in [
            SynthConfig { edge_density_target: 1.5, ..small() },
            SynthConfig { edge_density_target: 0.001, ..small() },
            SynthConfig { strength_tail_gamma: 1.0, ..small() },
            SynthConfig { noise_scale: 0.0, ..small() },
        ] {
            assert_eq!(generate_network(&bad).unwrap_err().name(), "UsageError");
        }
        let net = generate_network(&small()).unwrap();
        let short = SynthConfig { months: 12, ..small() };
        assert_eq!(generate_growth_panel(&net, &short).unwrap_err().name(), "UsageError");
    }

    #[test]
    fn panel_aggregates_without_loss() {
        let cfg = small();
        let net = generate_network(&cfg).unwrap();
        let panel = generate_growth_panel(&net, &cfg).unwrap();
        assert_eq!(panel.len(), 24);
        let year: Vec<FlowMatrix> = panel[..12].iter().map(|p| p.value.clone()).collect();
        let annual = aggregate_periods(&year).unwrap();
        let monthly_sum: f64 = year.iter().map(|m| m.total()).sum();
        assert!((annual.total() - monthly_sum).abs() < 1e-6 * monthly_sum);
        assert_eq!(annual.span(), PeriodSpan::year(2016).unwrap());
    }

    #[test]
    fn records_round_trip() {
        let cfg = small();
        let net = generate_network(&cfg).unwrap();
        let recs = to_records(&net).unwrap();
        let nodes = net.value.nodes().to_vec();
        let span = net.value.span();
        let v: FlowMatrix = build_matrix(&recs, Scheme::Sic5, WeightKind::Value, span, &nodes).unwrap();
        let c: FlowMatrix = build_matrix(&recs, Scheme::Sic5, WeightKind::Count, span, &nodes).unwrap();
        assert_eq!(v, net.value);
        assert_eq!(c, net.count);
    }

    #[test]
    fn suppression_is_seeded() {
        let recs = to_records(&generate_network(&small()).unwrap()).unwrap();
        let (mut a, mut b) = (recs.clone(), recs.clone());
        suppress_records(&mut a, 0.2, 3);
        suppress_records(&mut b, 0.2, 3);
        assert_eq!(a, b);
        let hit = a.iter().filter(|r| r.value.is_suppressed()).count();
        assert!(hit > 0 && hit < recs.len());
    }
}
