use std::sync::Arc;

use crate::data::Dataset;
use crate::error::Result;
use crate::statistic::{MonotoneStatistic, Statistic};

/// `S ↦ L(S) + γ·|S| − γ·n·p`.
pub struct EnforcedMonotone {
    inner: Arc<dyn Statistic>,
    gamma: f64,
    center: f64,
}

impl Statistic for EnforcedMonotone {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        Ok(self.inner.evaluate(s)? + self.gamma * s.count() as f64 - self.center)
    }

    fn name(&self) -> &str {
        "enforced_monotone"
    }
}

/// Wrap a statistic that is within additive `γ` of a monotone function. The
/// result is monotone and agrees with the inner statistic at `|S| = np`.
pub fn enforce_monotone(l_approx: Arc<dyn Statistic>, gamma: f64, n: usize, p: f64) -> MonotoneStatistic {
    MonotoneStatistic::new(EnforcedMonotone {
        inner: l_approx,
        gamma,
        center: gamma * n as f64 * p,
    })
}
