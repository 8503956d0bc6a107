//! End-to-end private estimators built on the quantile mechanisms.

mod eigen;
mod loss;
mod theta1;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::regression::{distance_to_interval, RegressionLoss};

pub use eigen::{estimate_eigenvalue, EigenEstimate, EigenTask};
pub use loss::{estimate_loss, test_loss, test_parameter, ArmLoss, LossTask, ParameterTest};
pub use theta1::{candidate_quantile_lists, estimate_theta1, DiscretizedProfiles, Theta1Estimate, Theta1Plan};

/// A real interval; endpoints may be infinite. Distances are taken to its
/// closure, so open/closed ends do not matter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// `Δ(w, π)`.
    pub fn distance(&self, w: f64) -> f64 {
        distance_to_interval(w, self.lo, self.hi)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Ordered, disjoint intervals covering `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    intervals: Vec<Interval>,
}

impl IntervalPartition {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptyPartition);
        }
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.lo < iv.hi) {
                return Err(Error::param("partition", format!("interval {i} is empty")));
            }
        }
        if intervals.windows(2).any(|w| w[0].hi != w[1].lo) {
            return Err(Error::param("partition", "intervals must be sorted and contiguous"));
        }
        Ok(IntervalPartition { intervals })
    }

    /// `κ` equal-width intervals of `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::EmptyPartition);
        }
        if !(lo < hi) {
            return Err(Error::param("partition", format!("[{lo}, {hi}] is empty")));
        }
        let w = (hi - lo) / kappa as f64;
        let edge = |i: usize| if i == kappa { hi } else { lo + i as f64 * w };
        Self::new((0..kappa).map(|i| Interval::new(edge(i), edge(i + 1))).collect())
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Index of the interval containing `w` (half-open, last one closed).
    pub fn locate(&self, w: f64) -> Option<usize> {
        let last = self.intervals.len() - 1;
        self.intervals
            .iter()
            .position(|iv| iv.lo <= w && (w < iv.hi || (w == iv.hi && self.intervals[last] == *iv)))
    }
}

/// A nonnegative loss with a fixed denominator and its profile over the
/// first parameter coordinate.
pub trait LossOracle: Send + Sync {
    fn loss(&self, s: &Dataset) -> Result<f64>;

    /// `min_{w ∈ π} L^{(w)}(S)` for each interval `π`.
    fn interval_losses(&self, s: &Dataset, intervals: &[Interval], out: &mut [f64]) -> Result<()>;
}

impl LossOracle for RegressionLoss {
    fn loss(&self, s: &Dataset) -> Result<f64> {
        Ok(self.profile(s).min_rss() / self.denom)
    }

    fn interval_losses(&self, s: &Dataset, intervals: &[Interval], out: &mut [f64]) -> Result<()> {
        let q = self.profile(s);
        for (iv, o) in intervals.iter().zip(out) {
            *o = q.min_rss_on(iv.lo, iv.hi) / self.denom;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_partition() {
        let p = IntervalPartition::uniform(-1.0, 1.0, 20).unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p.intervals()[0].lo, -1.0);
        assert_eq!(p.intervals()[19].hi, 1.0);
        assert_eq!(p.locate(0.35), Some(13));
        assert_eq!(p.locate(1.0), Some(19));
        assert_eq!(p.locate(1.5), None);
        assert_eq!(p.intervals()[13].distance(0.35), 0.0);
        assert!((p.intervals()[0].distance(0.35) - 1.25).abs() < 1e-12);
        assert_eq!(IntervalPartition::uniform(0.0, 1.0, 0), Err(Error::EmptyPartition));
        assert!(IntervalPartition::new(vec![Interval::new(0.0, 1.0), Interval::new(2.0, 3.0)]).is_err());
    }
}
