//! Katz-Bonacich influence vector `v = (a/n) [I - (1 - a) W]^-1 1`, where `W`
//! is the column-stochastic input-share matrix (rows suppliers, columns buyers)
//! and `a` the labour share.

use std::io::Write;

use crate::error::{Error, Result};
use crate::flow::IndustryCode;
use crate::linalg::lu_solve;
use crate::scalar::Scalar;
use crate::shares::{ShareDirection, ShareMatrix};

pub const DEFAULT_LABOUR_SHARE: f64 = 0.5;
/// Alternative labour shares used for robustness runs.
pub const ROBUSTNESS_LABOUR_SHARES: [f64; 2] = [0.3, 0.7];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    /// Dense LU factorisation.
    Direct,
    /// Fixed-point iteration `v <- a/n + (1 - a) W v` until the L1 step is below `tolerance`.
    Iterative { tolerance: f64, max_iter: usize },
}

impl Solver {
    pub fn iterative() -> Self {
        Solver::Iterative { tolerance: 1e-12, max_iter: 100_000 }
    }
}

/// Treatment of industries with no recorded inputs (all-zero share columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateRepair {
    /// Keep zero columns and flag the vector as not column-stochastic.
    None,
    /// Make the industry its own sole supplier.
    SelfLoop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceOptions {
    pub solver: Solver,
    pub repair: DegenerateRepair,
}

impl Default for InfluenceOptions {
    fn default() -> Self {
        InfluenceOptions { solver: Solver::Direct, repair: DegenerateRepair::None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector<S: Scalar = f64> {
    pub alpha_l: S,
    pub nodes: Vec<IndustryCode>,
    pub values: Vec<S>,
    /// True iff the share matrix had no degenerate columns (after any repair).
    pub column_stochastic: bool,
}

impl<S: Scalar> InfluenceVector<S> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "industry,influence")?;
        for (c, v) in self.nodes.iter().zip(&self.values) {
            writeln!(w, "{c},{v}")?;
        }
        Ok(())
    }
}

pub fn influence_vector<S: Scalar>(shares: &ShareMatrix<S>, alpha_l: S) -> Result<InfluenceVector<S>> {
    influence_vector_with(shares, alpha_l, InfluenceOptions::default())
}

pub fn influence_vector_with<S: Scalar>(
    shares: &ShareMatrix<S>,
    alpha_l: S,
    opts: InfluenceOptions,
) -> Result<InfluenceVector<S>> {
    if !(alpha_l > S::zero() && alpha_l <= S::one()) {
        return Err(Error::Usage(format!("labour share {alpha_l} outside (0, 1]")));
    }
    if shares.direction() != ShareDirection::Input {
        return Err(Error::Usage("influence vector needs input shares".into()));
    }
    let n = shares.n();
    if n == 0 {
        return Err(Error::Usage("influence vector of an empty network".into()));
    }
    let mut entries: Vec<((usize, usize), S)> = shares.entries().collect();
    let degenerate = shares.degenerate_axes();
    if opts.repair == DegenerateRepair::SelfLoop {
        entries.extend(degenerate.iter().map(|&j| ((j, j), S::one())));
    }
    let column_stochastic = degenerate.is_empty() || opts.repair == DegenerateRepair::SelfLoop;
    let decay = S::one() - alpha_l;
    let base = alpha_l / S::from_count(n);

    let values = match opts.solver {
        Solver::Direct => {
            // (I - decay W) u = 1, v = base * u
            let mut a = vec![vec![S::zero(); n]; n];
            for (k, row) in a.iter_mut().enumerate() {
                row[k] = S::one();
            }
            for &((i, j), w) in &entries {
                a[i][j] = a[i][j] - decay * w;
            }
            lu_solve(a, vec![S::one(); n])?.into_iter().map(|u| base * u).collect()
        }
        Solver::Iterative { tolerance, max_iter } => {
            let tol = S::lit(tolerance).max(S::epsilon() * S::from_count(n));
            let mut v = vec![base; n];
            let mut converged = false;
            for _ in 0..max_iter {
                let mut next = vec![base; n];
                for &((i, j), w) in &entries {
                    next[i] = next[i] + decay * w * v[j];
                }
                let step: S = next.iter().zip(&v).map(|(a, b)| (*a - *b).abs()).sum();
                v = next;
                if step < tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(format!("fixed-point iteration did not converge in {max_iter} steps")));
            }
            v
        }
    };
    Ok(InfluenceVector { alpha_l, nodes: shares.nodes().to_vec(), values, column_stochastic })
}

/// Empirical complementary CDF `P(X >= x)` over the positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccdf<S: Scalar = f64> {
    /// Distinct values ascending, with the fraction of observations at or above each.
    pub points: Vec<(S, S)>,
    pub zeros_excluded: usize,
}

impl<S: Scalar> Ccdf<S> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,p")?;
        for (x, p) in &self.points {
            writeln!(w, "{x},{p}")?;
        }
        Ok(())
    }
}

pub fn ccdf<S: Scalar>(values: &[S]) -> Result<Ccdf<S>> {
    let mut pos: Vec<S> = values.iter().copied().filter(|v| *v > S::zero()).collect();
    let zeros_excluded = values.len() - pos.len();
    if pos.is_empty() {
        return Err(Error::Usage("CCDF needs at least one positive value".into()));
    }
    pos.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = S::from_count(pos.len());
    let mut points = Vec::new();
    let mut k = 0;
    while k < pos.len() {
        points.push((pos[k], S::from_count(pos.len() - k) / n));
        let x = pos[k];
        while k < pos.len() && pos[k] == x {
            k += 1;
        }
    }
    Ok(Ccdf { points, zeros_excluded })
}

/// The `k` most central industries, descending; ties by industry code.
pub fn top_k<S: Scalar>(v: &InfluenceVector<S>, k: usize) -> Vec<(IndustryCode, S)> {
    let mut ranked: Vec<(IndustryCode, S)> = v.nodes.iter().cloned().zip(v.values.iter().copied()).collect();
    ranked.sort_by(|(ca, a), (cb, b)| {
        b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal).then_with(|| ca.as_str().cmp(cb.as_str()))
    });
    ranked.truncate(k);
    ranked
}

pub fn write_top_k_csv<S: Scalar, W: Write>(ranking: &[(IndustryCode, S)], mut w: W) -> Result<()> {
    writeln!(w, "industry,influence")?;
    for (c, v) in ranking {
        writeln!(w, "{c},{v}")?;
    }
    Ok(())
}
