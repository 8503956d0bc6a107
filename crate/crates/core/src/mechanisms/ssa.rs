use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MechanismOutput, Release};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::noise::{sample_laplace, PrivacyBudget};
use crate::statistic::Statistic;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Block-count constant `C` in `k = ⌈(C/ε)·ln(1/(βδ))⌉`.
    pub c: f64,
}

impl SsaConfig {
    pub fn new(alpha: f64, beta: f64) -> Self {
        SsaConfig { alpha, beta, c: 8.0 }
    }
}

/// Number of blocks `k`.
pub fn ssa_blocks(budget: &PrivacyBudget, cfg: &SsaConfig) -> Result<usize> {
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(Error::param("beta", format!("{} is outside (0, 1)", cfg.beta)));
    }
    if budget.delta <= 0.0 {
        return Err(Error::param("delta", "stable histograms need delta > 0"));
    }
    let k = (cfg.c / budget.epsilon * (1.0 / (cfg.beta * budget.delta)).ln()).ceil();
    Ok((k as usize).max(1))
}

/// Subsample-and-aggregate with a stable-histogram aggregator over width-α
/// bins. Returns ⊥ when no bin survives the threshold.
pub fn ssa_stable_histogram<R: Rng + ?Sized>(
    f: &dyn Statistic,
    z: &Dataset,
    budget: &PrivacyBudget,
    cfg: &SsaConfig,
    rng: &mut R,
) -> Result<MechanismOutput> {
    if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
        return Err(Error::param("alpha", format!("{} must be positive", cfg.alpha)));
    }
    let start = Instant::now();
    let k = ssa_blocks(budget, cfg)?;
    let n = z.len();
    if n < k {
        return Err(Error::InsufficientSamples { n, k });
    }
    let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        let (lo, hi) = (i * n / k, (i + 1) * n / k);
        let keep: Vec<bool> = (0..n).map(|j| (lo..hi).contains(&j)).collect();
        let block = z.masked(&keep)?;
        let size = block.count();
        if size == 0 {
            continue;
        }
        let y = f.evaluate(&block)? / size as f64;
        values.push(y);
        *bins.entry((y / cfg.alpha).floor() as i64).or_default() += 1;
    }
    let eps = budget.epsilon;
    let threshold = 2.0 * (2.0 / budget.delta).ln() / eps + 1.0;
    let mut best: Option<(f64, i64)> = None;
    for (&bin, &count) in &bins {
        let noisy = count as f64 + sample_laplace(2.0 / eps, rng)?;
        if noisy >= threshold && best.is_none_or(|(b, _)| noisy > b) {
            best = Some((noisy, bin));
        }
    }
    let value = match best {
        Some((_, bin)) => Release::Value((bin as f64 + 0.5) * cfg.alpha),
        None => Release::Bottom,
    };
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(MechanismOutput {
        value,
        queries_used: k as u64,
        wallclock: start.elapsed(),
        sample_min: lo,
        sample_max: hi,
        tau: k,
        t_star: None,
        core_average: None,
    })
}
