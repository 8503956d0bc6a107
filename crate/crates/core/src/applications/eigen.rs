use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{average_of_quantiles, MechanismOutput};
use crate::noise::PrivacyBudget;
use crate::statistic::{GramEigenvalue, MonotoneStatistic};
use crate::stream::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenTask {
    /// 1-based, descending (`λ_1` is the largest).
    pub index: usize,
    pub alpha: f64,
    pub p: f64,
    pub budget: PrivacyBudget,
    pub beta: f64,
    pub query_cap: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub output: MechanismOutput,
}

/// Estimate `λ_i` of the second-moment matrix on a log scale: the average of
/// quantiles of `ln(λ_i(Σ_{z ∈ S} z zᵀ)/(n·p))`, exponentiated.
pub fn estimate_eigenvalue(z: &Dataset, task: &EigenTask, stream: Stream) -> Result<EigenEstimate> {
    let d = z.width();
    let np = z.len() as f64 * task.p;
    if np < 2.0 * d as f64 {
        return Err(Error::param("n", format!("n·p = {np} is below 2d = {}", 2 * d)));
    }
    let stat = GramEigenvalue::new(d, task.index)?.scaled(1.0 / np).log_scale();
    let f = MonotoneStatistic::new(stat).with_query_cap(task.query_cap);
    let out = average_of_quantiles(&f, z, &task.budget, task.alpha, task.p, stream)?;
    if out.sample_min == f64::NEG_INFINITY {
        return Err(Error::RankDeficient);
    }
    match out.value.value() {
        Some(y) => Ok(EigenEstimate { value: y.exp(), output: out }),
        None => Err(Error::NoStableCore),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> EigenTask {
        EigenTask {
            index: 2,
            alpha: 0.2,
            p: 0.1,
            budget: PrivacyBudget::new(20.0, 0.3).unwrap(),
            beta: 0.1,
            query_cap: None,
        }
    }

    #[test]
    fn rank_deficient_data() {
        let z = Dataset::from_rows(&vec![vec![1.0, 0.0]; 100]).unwrap();
        assert_eq!(estimate_eigenvalue(&z, &task(), Stream::new(1)).unwrap_err(), Error::RankDeficient);
    }

    #[test]
    fn too_few_points() {
        let z = Dataset::from_rows(&vec![vec![1.0, 0.0]; 30]).unwrap();
        assert!(matches!(estimate_eigenvalue(&z, &task(), Stream::new(1)), Err(Error::Parameter { .. })));
    }
}
