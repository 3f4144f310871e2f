//! Monte-Carlo truncation errors, bound curves, TV distance and
//! anti-concentration.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitIR, ParamPoint};
use crate::error::{Error, Result};
use crate::expectation::{build_series, Observable, SeriesOptions};
use crate::oracle::{exact_distribution, exact_expectation};
use crate::propagate::ParamCache;
use crate::rng::stream_rng;

/// `(1−γ)^L · norm_factor`.
pub fn error_bound(gamma: f64, budget: usize, norm_factor: f64) -> f64 {
    (1.0 - gamma).powi(budget as i32) * norm_factor
}

/// Scale multiplying `(1−γ)^L` in the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormFactor {
    One,
    /// `‖O‖_HS / 2^{n/2}`, the root sum of squared coefficients.
    NormalizedHs,
    /// Sum of absolute coefficients.
    L1,
}

impl NormFactor {
    pub fn value(self, obs: &Observable) -> f64 {
        match self {
            NormFactor::One => 1.0,
            NormFactor::NormalizedHs => obs.normalized_hs_norm(),
            NormFactor::L1 => obs.l1_norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub budget: usize,
    pub rms: f64,
    pub bound: f64,
    pub stderr: f64,
    pub draws: usize,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSweep {
    pub gamma: f64,
    pub norm_factor: f64,
    pub seed: u64,
    pub records: Vec<SweepRecord>,
}

impl ErrorSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,rms,bound,stderr,draws,seed\n");
        for r in &self.records {
            writeln!(out, "{},{:.12e},{:.12e},{:.12e},{},{}", r.budget, r.rms, r.bound, r.stderr, r.draws, self.seed)
                .unwrap();
        }
        out
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Parameter point `i` of a common-random-number ensemble.
pub fn draw_params(c: &CircuitIR, seed: u64, i: usize) -> ParamPoint {
    ParamPoint::random(c, &mut stream_rng(seed, i as u64))
}

/// RMS truncation error per budget over the same `draws` parameter points.
///
/// `gamma` defaults to the smallest spectral gap among the circuit's noise
/// channels. The reported standard error is that of the RMS, propagated from
/// the mean squared error.
pub fn mc_l2_error(
    c: &CircuitIR,
    obs: &Observable,
    budgets: &[usize],
    draws: usize,
    seed: u64,
    norm: NormFactor,
    gamma: Option<f64>,
) -> Result<ErrorSweep> {
    if draws < 2 {
        return Err(Error::InvalidArgument("need at least 2 draws".into()));
    }
    let gamma = match gamma {
        Some(g) => g,
        None => c.min_spectral_gap()?,
    };
    let points: Vec<ParamPoint> = (0..draws).map(|i| draw_params(c, seed, i)).collect();
    let exact: Vec<f64> = points.par_iter().map(|p| exact_expectation(c, obs, p, true)).collect::<Result<_>>()?;
    let caches: Vec<ParamCache> = points.iter().map(ParamCache::new).collect::<Result<_>>()?;
    let nf = norm.value(obs);

    let mut records = Vec::with_capacity(budgets.len());
    for &l in budgets {
        let series = build_series(c, obs, l, SeriesOptions::default())?;
        let sq: Vec<f64> = caches
            .par_iter()
            .zip(&exact)
            .map(|(cache, e)| Ok((series.evaluate_cached(cache)? - e).powi(2)))
            .collect::<Result<_>>()?;
        let (ms, ms_se) = mean_stderr(&sq);
        let rms = ms.sqrt();
        let stderr = if rms > 0.0 { ms_se / (2.0 * rms) } else { 0.0 };
        records.push(SweepRecord {
            budget: l,
            rms,
            bound: error_bound(gamma, l, nf),
            stderr,
            draws,
            paths: series.stats.total,
        });
    }
    Ok(ErrorSweep { gamma, norm_factor: nf, seed, records })
}

/// `½ Σ |p_i − q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", p.len(), q.len())));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `2^n Σ_x p(x)²` for one distribution.
pub fn collision_moment(p: &[f64]) -> f64 {
    p.len() as f64 * p.iter().map(|x| x * x).sum::<f64>()
}

/// Haar (Porter–Thomas) value of `2^n Σ_x E[p(x)²]`.
pub fn porter_thomas_moment(n: usize) -> f64 {
    let d = (1u64 << n) as f64;
    2.0 * d / (d + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiConcentration {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
}

/// Monte-Carlo estimate of `2^n Σ_x E[p(x)²]` over an ensemble; `sample(i)`
/// returns the circuit and parameters of draw `i`.
pub fn anticoncentration_estimate<F>(sample: F, draws: usize, noisy: bool) -> Result<AntiConcentration>
where
    F: Fn(usize) -> Result<(CircuitIR, ParamPoint)> + Sync,
{
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least 1 draw".into()));
    }
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let (c, p) = sample(i)?;
            Ok(collision_moment(&exact_distribution(&c, &p, noisy)?))
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_stderr(&values);
    Ok(AntiConcentration { mean, stderr: if draws > 1 { se } else { 0.0 }, draws })
}

/// Ensemble of random parameter points on a fixed circuit structure.
pub fn anticoncentration_of_circuit(c: &CircuitIR, draws: usize, seed: u64, noisy: bool) -> Result<AntiConcentration> {
    anticoncentration_estimate(|i| Ok((c.clone(), draw_params(c, seed, i))), draws, noisy)
}
