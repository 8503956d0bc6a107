use std::sync::Arc;

use super::{Interval, LossOracle};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{average_of_quantiles, median_of_quantiles, MechanismOutput, Release};
use crate::noise::PrivacyBudget;
use crate::statistic::{MonotoneStatistic, Range, Statistic};
use crate::stream::Stream;

#[derive(Clone)]
pub struct LossTask {
    pub oracle: Arc<dyn LossOracle>,
    /// Clip level `ρ` for the normalized interval losses.
    pub rho: f64,
    pub p: f64,
    pub alpha: f64,
    pub budget: PrivacyBudget,
    pub beta: f64,
    pub query_cap: Option<u64>,
}

impl LossTask {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("{} must be positive", self.alpha)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::param("rho", format!("{} must be positive", self.rho)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("beta", format!("{} is outside (0, 1)", self.beta)));
        }
        Ok(())
    }
}

/// `L(S)/p`.
struct ScaledLoss {
    oracle: Arc<dyn LossOracle>,
    p: f64,
}

impl Statistic for ScaledLoss {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        Ok(self.oracle.loss(s)? / self.p)
    }

    fn name(&self) -> &str {
        "scaled_loss"
    }
}

/// `1[L(S)/p ≥ threshold]`.
struct LossIndicator {
    oracle: Arc<dyn LossOracle>,
    p: f64,
    threshold: f64,
}

impl Statistic for LossIndicator {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        Ok(f64::from(u8::from(self.oracle.loss(s)? / self.p >= self.threshold)))
    }

    fn name(&self) -> &str {
        "loss_indicator"
    }
}

/// `(1/p)·clip_ρ(min_{w ∈ π} L^{(w)}(S))`.
pub struct ArmLoss {
    pub oracle: Arc<dyn LossOracle>,
    pub interval: Interval,
    pub p: f64,
    pub rho: f64,
}

impl Statistic for ArmLoss {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        let mut out = [0.0];
        self.oracle.interval_losses(s, &[self.interval], &mut out)?;
        Ok(out[0].clamp(0.0, self.rho) / self.p)
    }

    fn name(&self) -> &str {
        "arm_loss"
    }
}

/// Private estimate of the population loss: average of quantiles of `L/p`.
pub fn estimate_loss(z: &Dataset, task: &LossTask, stream: Stream) -> Result<MechanismOutput> {
    task.validate()?;
    let f = MonotoneStatistic::new(ScaledLoss {
        oracle: task.oracle.clone(),
        p: task.p,
    })
    .with_query_cap(task.query_cap);
    average_of_quantiles(&f, z, &task.budget, task.alpha / 2.0, task.p, stream)
}

/// Private test of `L ≥ 2α` against `L ≤ α`; `true` means reject (large loss).
pub fn test_loss(z: &Dataset, task: &LossTask, stream: Stream) -> Result<(bool, MechanismOutput)> {
    task.validate()?;
    let f = MonotoneStatistic::new(LossIndicator {
        oracle: task.oracle.clone(),
        p: task.p,
        threshold: 1.5 * task.alpha,
    })
    .with_range(Range::integers(1))
    .with_query_cap(task.query_cap);
    let out = median_of_quantiles(&f, z, &task.budget, task.beta / 2.0, task.p, stream)?;
    Ok((out.value == Release::Value(1.0), out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterTest {
    /// −1, 0 or +1.
    pub decision: i8,
    /// Releases for the arms `(−∞, −t]`, `(−t, t)`, `[t, ∞)`.
    pub arms: [Release; 3],
    pub queries_used: u64,
}

/// Arm with the smallest release, counting ⊥ as +∞.
fn pick_arm(releases: &[Release]) -> Result<usize> {
    releases
        .iter()
        .enumerate()
        .filter_map(|(j, r)| r.value().map(|v| (j, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|b| b.0)
        .ok_or(Error::NoStableArm)
}

/// Decide whether the first coefficient is below `−t`, inside `(−t, t)` or
/// above `t` by comparing private loss estimates restricted to each arm.
pub fn test_parameter(z: &Dataset, task: &LossTask, t: f64, stream: Stream) -> Result<ParameterTest> {
    task.validate()?;
    if !(t > 0.0) {
        return Err(Error::param("t", format!("threshold {t} must be positive")));
    }
    let budget = PrivacyBudget::new(task.budget.epsilon / 3.0, task.budget.delta / 6.0)?;
    let arms = [
        Interval::new(f64::NEG_INFINITY, -t),
        Interval::new(-t, t),
        Interval::new(t, f64::INFINITY),
    ];
    let mut releases = [Release::Bottom; 3];
    let mut queries = 0;
    for (j, iv) in arms.iter().enumerate() {
        let f = MonotoneStatistic::new(ArmLoss {
            oracle: task.oracle.clone(),
            interval: *iv,
            p: task.p,
            rho: task.rho,
        })
        .with_query_cap(task.query_cap);
        let out = average_of_quantiles(&f, z, &budget, task.alpha * task.alpha, task.p, stream.child("arm", j as u64))?;
        releases[j] = out.value;
        queries += out.queries_used;
    }
    Ok(ParameterTest {
        decision: pick_arm(&releases)? as i8 - 1,
        arms: releases,
        queries_used: queries,
    })
}
