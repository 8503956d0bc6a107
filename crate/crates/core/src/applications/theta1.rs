use std::sync::Arc;

use serde::Serialize;

use super::{Interval, IntervalPartition, LossOracle, LossTask};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{median_release, median_tau, quantile_finder_family, QuantileFinderConfig, QuantileList};
use crate::selection::{call_cap, select_min, SelectionConfig};
use crate::statistic::{Grid, StatisticFamily};
use crate::stream::Stream;

/// Failure-probability constant of the outer selection.
const C: f64 = 0.1;

/// Derived parameters of the interval estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theta1Plan {
    pub kappa: usize,
    pub t_reps: usize,
    pub eps_prime: f64,
    pub delta_prime: f64,
    /// Per-candidate failure probability.
    pub beta_candidate: f64,
    pub grid_step: f64,
    pub grid_size: usize,
    pub tau: usize,
    pub m: u64,
    #[serde(skip)]
    pub selection: SelectionConfig,
    #[serde(skip)]
    pub finder: QuantileFinderConfig,
}

impl Theta1Plan {
    pub fn new(task: &LossTask, kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::EmptyPartition);
        }
        if !(task.beta > 0.0 && task.beta < 1.0) {
            return Err(Error::param("beta", format!("{} is outside (0, 1)", task.beta)));
        }
        let t_reps = (5.0 / C * (1.0 / task.beta).ln()).ceil() as usize;
        let eps_prime = task.budget.epsilon / (3.0 * t_reps as f64);
        let delta_prime = task.budget.delta / kappa as f64;
        let beta_candidate = C / (2.0 * kappa as f64 * call_cap(kappa, C / 2.0) as f64);
        let grid_step = task.alpha * task.alpha;
        let grid_size = (task.rho / (task.p * grid_step)).ceil() as usize + 1;
        let tau = median_tau(eps_prime, grid_size, beta_candidate)?;
        let finder = QuantileFinderConfig::new(task.p, tau, delta_prime)?;
        Ok(Theta1Plan {
            kappa,
            t_reps,
            eps_prime,
            delta_prime,
            beta_candidate,
            grid_step,
            grid_size,
            tau,
            m: finder.m()?,
            selection: SelectionConfig::new(kappa, C / 2.0)?,
            finder,
        })
    }

    pub fn grid(&self) -> Grid {
        Grid::new(0.0, self.grid_step, self.grid_size).expect("positive step and size")
    }
}

/// `f^{(π)}(S) = ⌊(1/p)·clip_ρ(min_{w ∈ π} L^{(w)}(S))⌋` on the `α²` grid, for
/// every interval, from one loss fit per subsample.
pub struct DiscretizedProfiles {
    pub oracle: Arc<dyn LossOracle>,
    pub intervals: Vec<Interval>,
    pub p: f64,
    pub rho: f64,
    pub grid: Grid,
}

impl StatisticFamily for DiscretizedProfiles {
    fn size(&self) -> usize {
        self.intervals.len()
    }

    fn evaluate_into(&self, s: &Dataset, out: &mut [f64]) -> Result<()> {
        self.oracle.interval_losses(s, &self.intervals, out)?;
        for v in out.iter_mut() {
            *v = self.grid.floor(v.clamp(0.0, self.rho) / self.p);
        }
        Ok(())
    }
}

/// Quantile lists of every candidate, all drawn with the shared stream `r`.
pub fn candidate_quantile_lists(
    z: &Dataset,
    task: &LossTask,
    partition: &IntervalPartition,
    plan: &Theta1Plan,
    r: Stream,
) -> Result<Vec<QuantileList>> {
    let family = DiscretizedProfiles {
        oracle: task.oracle.clone(),
        intervals: partition.intervals().to_vec(),
        p: task.p,
        rho: task.rho,
        grid: plan.grid(),
    };
    quantile_finder_family(&family, z, &plan.finder, r, task.query_cap)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theta1Estimate {
    pub index: usize,
    pub interval: Interval,
    /// Interval chosen by each selection round.
    pub selections: Vec<usize>,
    pub candidate_calls: u64,
    pub queries_used: u64,
    pub plan: Theta1Plan,
}

/// Private choice of the partition interval holding the first coefficient.
pub fn estimate_theta1(z: &Dataset, task: &LossTask, partition: &IntervalPartition, stream: Stream) -> Result<Theta1Estimate> {
    let kappa = partition.len();
    let plan = Theta1Plan::new(task, kappa)?;
    if kappa == 1 {
        return Ok(Theta1Estimate {
            index: 0,
            interval: partition.intervals()[0],
            selections: vec![0; plan.t_reps],
            candidate_calls: 0,
            queries_used: 0,
            plan,
        });
    }
    let lists = candidate_quantile_lists(z, task, partition, &plan, stream.child("shared-seed", 0))?;
    let grid = plan.grid();
    let mut selections = Vec::with_capacity(plan.t_reps);
    let mut calls = 0u64;
    for rep in 0..plan.t_reps {
        let round = stream.child("selection-round", rep as u64);
        let sel = select_min(kappa, &plan.selection, &mut round.rng(), |i, order| {
            let mut rng = round.child("candidate", order).rng();
            median_release(&lists[i].q, &grid, plan.eps_prime, &mut rng)
        })?;
        calls += sel.log.len() as u64;
        selections.push(sel.index);
    }
    let mut sorted = selections.clone();
    sorted.sort_unstable();
    let index = sorted[(sorted.len() - 1) / 2];
    Ok(Theta1Estimate {
        index,
        interval: partition.intervals()[index],
        selections,
        candidate_calls: calls,
        queries_used: plan.m * kappa as u64,
        plan,
    })
}
