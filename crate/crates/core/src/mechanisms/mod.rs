//! Quantile-based private release mechanisms and the subsample-and-aggregate
//! baseline.

mod average;
mod median;
mod monotone;
mod quantile_finder;
mod ssa;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use average::{average_of_quantiles, average_release, average_tau, core_average, t_star, AverageRelease};
pub use median::{grid_scores, median_of_quantiles, median_release, median_tau, score, score_of};
pub use monotone::{enforce_monotone, EnforcedMonotone};
pub use quantile_finder::{
    quantile_finder, quantile_finder_family, QuantileFinderConfig, QuantileList, DRAW_BLOCK,
};
pub use ssa::{ssa_blocks, ssa_stable_histogram, SsaConfig};

/// Mechanism parameters as they appear in JSON configs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_cap: Option<u64>,
}

/// A released value or ⊥.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Release {
    Value(f64),
    Bottom,
}

impl Release {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Release::Value(v) => Some(v),
            Release::Bottom => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Release::Bottom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutput {
    pub value: Release,
    pub queries_used: u64,
    #[serde(skip)]
    pub wallclock: Duration,
    /// Smallest and largest statistic value over the subsamples drawn.
    pub sample_min: f64,
    pub sample_max: f64,
    pub tau: usize,
    pub t_star: Option<usize>,
    pub core_average: Option<f64>,
}
