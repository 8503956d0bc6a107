use std::time::Instant;

use rand::Rng;

use super::{quantile_finder, MechanismOutput, QuantileFinderConfig, Release};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::noise::{PrivacyBudget, TruncatedLaplace};
use crate::statistic::MonotoneStatistic;
use crate::stream::Stream;

/// `τ = ⌈(16/ε′)·ln(1/δ′)⌉` rounded up to a multiple of 8, where `ε′`, `δ′` are
/// the per-step budget.
pub fn average_tau(eps_prime: f64, delta_prime: f64) -> Result<usize> {
    let raw = (16.0 / eps_prime * (1.0 / delta_prime).ln()).ceil();
    if !(raw.is_finite() && raw >= 1.0) {
        return Err(Error::Config(format!("average tau = {raw} is not a positive integer")));
    }
    Ok((raw as usize).div_ceil(8) * 8)
}

/// `t* = min{t ∈ [1, τ/2] : q(τ−t) − q(t) ≤ α}`.
pub fn t_star(q: &[f64], alpha: f64) -> usize {
    let tau = q.len();
    (1..=tau / 2)
        .find(|&t| q[tau - t - 1] - q[t - 1] <= alpha)
        .unwrap_or(tau / 2)
}

/// `(4/τ)·Σ_{i=1..τ/4} q(t*+i)`.
pub fn core_average(q: &[f64], t_star: usize) -> f64 {
    let tau = q.len();
    let sum: f64 = q[t_star..t_star + tau / 4].iter().sum();
    4.0 * sum / tau as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageRelease {
    pub value: Release,
    pub t_star: usize,
    pub core_average: Option<f64>,
}

/// Core test and noisy core average for a quantile list of length `τ ≡ 0 (mod 8)`.
pub fn average_release<R: Rng + ?Sized>(
    q: &[f64],
    alpha: f64,
    eps_prime: f64,
    delta_prime: f64,
    rng: &mut R,
) -> Result<AverageRelease> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("{alpha} must be positive")));
    }
    let tau = q.len();
    if tau < 8 || tau % 8 != 0 {
        return Err(Error::Contract(format!("list length {tau} is not a positive multiple of 8")));
    }
    let ts = t_star(q, alpha);
    let tf = tau as f64;
    let gate = TruncatedLaplace::new(1.0 / eps_prime, tf / 8.0)?.sample(rng);
    if ts as f64 + gate > tf / 4.0 - 1.0 {
        return Ok(AverageRelease {
            value: Release::Bottom,
            t_star: ts,
            core_average: None,
        });
    }
    let core = core_average(q, ts);
    let scale = 16.0 * alpha / (tf * eps_prime);
    let bound = scale * (1.0 / delta_prime).ln();
    let y = core + TruncatedLaplace::new(scale, bound)?.sample(rng);
    assert!((y - core).abs() <= bound, "release escaped the truncation bound");
    Ok(AverageRelease {
        value: Release::Value(y),
        t_star: ts,
        core_average: Some(core),
    })
}

pub fn average_of_quantiles(
    f: &MonotoneStatistic,
    z: &Dataset,
    budget: &PrivacyBudget,
    alpha: f64,
    p: f64,
    stream: Stream,
) -> Result<MechanismOutput> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("{alpha} must be positive")));
    }
    let start = Instant::now();
    let (eps, delta) = (budget.epsilon / 2.0, budget.delta / 3.0);
    let tau = average_tau(eps, delta)?;
    let cfg = QuantileFinderConfig::new(p, tau, delta)?;
    let list = quantile_finder(f, z, &cfg, stream.child("quantile-finder", 0))?;
    let mut rng = stream.child("core-release", 0).rng();
    let rel = average_release(&list.q, alpha, eps, delta, &mut rng)?;
    Ok(MechanismOutput {
        value: rel.value,
        queries_used: list.m,
        wallclock: start.elapsed(),
        sample_min: list.sample_min,
        sample_max: list.sample_max,
        tau,
        t_star: Some(rel.t_star),
        core_average: rel.core_average,
    })
}
