//! Continuous power-law tail fitting: Hill MLE, KS-minimising `xmin`, and a
//! semi-parametric bootstrap goodness-of-fit p-value.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowMatrix;
use crate::scalar::{format_scalar, Scalar};

pub const MIN_SAMPLE: usize = 10;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 1000;
pub const MIN_BOOTSTRAP_REPS: usize = 100;
/// Flows below this quantile of transaction value are dropped in the truncation robustness run.
pub const ROBUSTNESS_VALUE_QUANTILE: f64 = 0.1;
pub const FIT_CSV_HEADER: &str = "gamma,xmin,logLik,KS.stat,p-value";
pub const NOT_RUN: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit<S: Scalar = f64> {
    pub gamma: S,
    pub xmin: S,
    pub log_lik: S,
    pub ks_stat: S,
    /// `None` until a bootstrap has been run.
    pub p_value: Option<S>,
    pub n_tail: usize,
}

impl<S: Scalar> PowerLawFit<S> {
    pub fn with_p_value(mut self, p: S) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn csv_row(&self, digits: Option<usize>) -> String {
        let f = |v: S| format_scalar(v, digits);
        let p = self.p_value.map_or_else(|| NOT_RUN.to_string(), f);
        format!("{},{},{},{},{}", f(self.gamma), f(self.xmin), f(self.log_lik), f(self.ks_stat), p)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, digits: Option<usize>) -> Result<()> {
        writeln!(w, "{FIT_CSV_HEADER}")?;
        writeln!(w, "{}", self.csv_row(digits))?;
        Ok(())
    }
}

fn check_positive<S: Scalar>(xs: &[S]) -> Result<()> {
    match xs.iter().find(|x| !(x.is_finite() && **x > S::zero())) {
        Some(x) => Err(Error::Usage(format!("power-law data must be positive and finite, got {x}"))),
        None => Ok(()),
    }
}

/// Hill maximum-likelihood exponent and log-likelihood of the tail `x >= xmin`.
pub fn hill_fit<S: Scalar>(xs: &[S], xmin: S) -> Result<(S, S)> {
    check_positive(xs)?;
    if !(xmin > S::zero()) {
        return Err(Error::Usage(format!("xmin must be positive, got {xmin}")));
    }
    let ln_xmin = xmin.ln();
    let tail: Vec<S> = xs.iter().filter(|&&x| x >= xmin).map(|x| x.ln() - ln_xmin).collect();
    if tail.len() < 2 {
        return Err(Error::Usage(format!("need at least 2 observations >= xmin, got {}", tail.len())));
    }
    let m = S::from_count(tail.len());
    let sum_ln: S = tail.iter().copied().sum();
    hill_from_sums(m, sum_ln, ln_xmin)
        .ok_or_else(|| Error::Degenerate("all tail values equal xmin; exponent is infinite".into()))
}

fn hill_from_sums<S: Scalar>(m: S, sum_ln: S, ln_xmin: S) -> Option<(S, S)> {
    if !(sum_ln > S::zero()) {
        return None;
    }
    let gamma = S::one() + m / sum_ln;
    let log_lik = m * (gamma - S::one()).ln() - m * ln_xmin - gamma * sum_ln;
    Some((gamma, log_lik))
}

/// Choose `xmin` among the distinct data values by minimising the KS distance
/// between the empirical tail and the fitted power law; ties go to the smaller `xmin`.
pub fn select_xmin<S: Scalar>(xs: &[S]) -> Result<PowerLawFit<S>> {
    if xs.len() < MIN_SAMPLE {
        return Err(Error::Usage(format!("need at least {MIN_SAMPLE} observations, got {}", xs.len())));
    }
    check_positive(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let logs: Vec<S> = sorted.iter().map(|x| x.ln()).collect();
    let n = sorted.len();
    // suffix[s] = sum of logs[s..]
    let mut suffix = vec![S::zero(); n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + logs[k];
    }
    // group_end[k] = one past the last index equal to sorted[k]
    let mut group_end = vec![n; n];
    for k in (0..n - 1).rev() {
        group_end[k] = if sorted[k + 1] == sorted[k] { group_end[k + 1] } else { k + 1 };
    }

    let mut best: Option<PowerLawFit<S>> = None;
    let mut start = 0;
    while start < n {
        let m = n - start;
        let ln_xmin = logs[start];
        let mf = S::from_count(m);
        let fit = hill_from_sums(mf, suffix[start] - mf * ln_xmin, ln_xmin);
        if let (true, Some((gamma, log_lik))) = (m >= 2, fit) {
            let ks = ks_distance(&sorted[start..], &logs[start..], &group_end[start..], start, gamma, ln_xmin);
            if best.is_none_or(|b| ks < b.ks_stat) {
                best = Some(PowerLawFit { gamma, xmin: sorted[start], log_lik, ks_stat: ks, p_value: None, n_tail: m });
            }
        }
        start = group_end[start];
    }
    best.ok_or_else(|| Error::Degenerate("no candidate xmin leaves a non-constant tail".into()))
}

/// Two-sided KS distance; the empirical CDF jumps by the full multiplicity of tied values.
fn ks_distance<S: Scalar>(tail: &[S], logs: &[S], group_end: &[usize], offset: usize, gamma: S, ln_xmin: S) -> S {
    let m = S::from_count(tail.len());
    let expo = S::one() - gamma;
    let mut d = S::zero();
    let mut k = 0;
    while k < tail.len() {
        let end = group_end[k] - offset;
        let model = S::one() - (expo * (logs[k] - ln_xmin)).exp();
        let below = S::from_count(k) / m;
        let upto = S::from_count(end) / m;
        d = d.max((model - below).abs()).max((upto - model).abs());
        k = end;
    }
    d.min(S::one())
}

/// Draw from the continuous power law with exponent `gamma` above `xmin`.
pub fn sample_power_law<S: Scalar, R: Rng + ?Sized>(rng: &mut R, gamma: S, xmin: S) -> S {
    let u: f64 = rng.random();
    xmin * S::lit(1.0 - u).powf(-S::one() / (gamma - S::one()))
}

/// Fraction of bootstrap replicates whose refitted KS distance is at least the observed one.
///
/// Each replicate keeps the sample size, draws tail points from the fitted law with
/// probability `n_tail / n` and otherwise resamples the empirical body below `xmin`.
/// Replicate `r` uses ChaCha8 stream `r` of `seed`, so the result does not depend on scheduling.
pub fn bootstrap_pvalue<S: Scalar>(xs: &[S], fit: &PowerLawFit<S>, n_reps: usize, seed: u64) -> Result<S> {
    if n_reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::Usage(format!("bootstrap needs at least {MIN_BOOTSTRAP_REPS} replicates, got {n_reps}")));
    }
    check_positive(xs)?;
    let body: Vec<S> = xs.iter().copied().filter(|&x| x < fit.xmin).collect();
    let n = xs.len();
    let p_tail = fit.n_tail as f64 / n as f64;
    let exceed = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let sample: Vec<S> = (0..n)
                .map(|_| {
                    if body.is_empty() || rng.random::<f64>() < p_tail {
                        sample_power_law(&mut rng, fit.gamma, fit.xmin)
                    } else {
                        body[rng.random_range(0..body.len())]
                    }
                })
                .collect();
            select_xmin(&sample).map(|refit| refit.ks_stat >= fit.ks_stat)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(S::from_count(exceed.iter().filter(|&&e| e).count()) / S::from_count(n_reps))
}

/// Drop flows strictly below the `q` quantile (type 7) of the positive cell values.
pub fn drop_below_value_quantile<S: Scalar>(m: &FlowMatrix<S>, q: S) -> Result<FlowMatrix<S>> {
    let values: Vec<S> = m.entries().map(|(_, v)| v).collect();
    if values.is_empty() {
        return Ok(m.clone());
    }
    let cut = crate::diffquant::quantile_summary(&values, &[q])?[0];
    Ok(m.retain_entries(|_, v| v >= cut))
}
