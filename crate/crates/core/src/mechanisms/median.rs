use std::time::Instant;

use rand::Rng;

use super::{quantile_finder, MechanismOutput, QuantileFinderConfig, Release};
use crate::data::{rank, Dataset};
use crate::error::{Error, Result};
use crate::noise::{exponential_mechanism_runs, PrivacyBudget};
use crate::statistic::{Grid, MonotoneStatistic};
use crate::stream::Stream;

/// `τ = ⌈(4/ε)·ln(κ/β)⌉`.
pub fn median_tau(eps: f64, kappa: usize, beta: f64) -> Result<usize> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("{beta} is outside (0, 1)")));
    }
    let tau = (4.0 / eps * (kappa as f64 / beta).ln()).ceil();
    if !(tau.is_finite() && tau >= 1.0) {
        return Err(Error::Config(format!("median tau = {tau} is not a positive integer")));
    }
    Ok(tau as usize)
}

/// Distance-based score of a point whose rank in the list lies anywhere in
/// `[below, at_or_below]`: `−dist(τ/2, [below, at_or_below])`. Off the atoms of
/// the list this is `−|rank − τ/2|`; a point equal to the middle entries of the
/// list scores 0.
pub fn score(below: usize, at_or_below: usize, tau: usize) -> f64 {
    let half = tau as f64 / 2.0;
    let (lo, hi) = (below as f64, at_or_below as f64);
    if half < lo {
        half - lo
    } else if half > hi {
        hi - half
    } else {
        0.0
    }
}

/// Exponential-mechanism release over `grid` with [`score`] (sensitivity 1).
/// Grid points are grouped into runs of equal score, so the cost is
/// `O(τ log κ)` rather than `O(κ)`.
pub fn median_release<R: Rng + ?Sized>(q: &[f64], grid: &Grid, eps: f64, rng: &mut R) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::NoSamples);
    }
    let tau = q.len();
    // first grid index with value ≥ q(t), and first with value > q(t)
    let ge: Vec<usize> = q.iter().map(|&x| grid.count_below(x)).collect();
    let gt: Vec<usize> = q.iter().map(|&x| grid.count_not_above(x)).collect();
    let mut cuts: Vec<usize> = ge.iter().chain(&gt).copied().filter(|&c| c > 0 && c < grid.size).collect();
    cuts.push(grid.size);
    cuts.sort_unstable();
    cuts.dedup();
    let mut runs = Vec::with_capacity(cuts.len());
    let mut starts = Vec::with_capacity(cuts.len());
    let mut start = 0usize;
    for end in cuts {
        let below = gt.partition_point(|&c| c <= start);
        let at_or_below = ge.partition_point(|&c| c <= start);
        runs.push((score(below, at_or_below, tau), (end - start) as u64));
        starts.push(start);
        start = end;
    }
    let (r, off) = exponential_mechanism_runs(&runs, eps, 1.0, rng)?;
    Ok(grid.value(starts[r] + off as usize))
}

/// Score of `y` against the sorted list `q`.
pub fn score_of(y: f64, q: &[f64]) -> f64 {
    score(q.partition_point(|&x| x < y), rank(y, q), q.len())
}

/// Scores of every grid point, by direct rank computation.
pub fn grid_scores(q: &[f64], grid: &Grid) -> Vec<f64> {
    (0..grid.size).map(|k| score_of(grid.value(k), q)).collect()
}

pub fn median_of_quantiles(
    f: &MonotoneStatistic,
    z: &Dataset,
    budget: &PrivacyBudget,
    beta: f64,
    p: f64,
    stream: Stream,
) -> Result<MechanismOutput> {
    let start = Instant::now();
    let grid = Grid::try_from(f.range())?;
    let tau = median_tau(budget.epsilon, grid.size, beta)?;
    let cfg = QuantileFinderConfig::new(p, tau, budget.delta)?;
    let list = quantile_finder(f, z, &cfg, stream.child("quantile-finder", 0))?;
    let mut rng = stream.child("exponential-mechanism", 0).rng();
    let y = median_release(&list.q, &grid, budget.epsilon, &mut rng)?;
    Ok(MechanismOutput {
        value: Release::Value(y),
        queries_used: list.m,
        wallclock: start.elapsed(),
        sample_min: list.sample_min,
        sample_max: list.sample_max,
        tau,
        t_star: None,
        core_average: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::exponential_mechanism;
    use crate::statistic::{Constant, Count, Range};
    use proptest::prelude::*;

    #[test]
    fn run_grouping_matches_direct_scores() {
        let grid = Grid::new(0.0, 0.5, 21).unwrap();
        let lists: [&[f64]; 4] = [
            &[1.0, 1.0, 2.5, 3.0, 7.0],
            &[-3.0, -1.0, 0.0],
            &[20.0, 30.0],
            &[0.25, 0.75, 4.9, 5.0, 5.0, 5.1],
        ];
        for q in lists {
            let scores = grid_scores(q, &grid);
            for seed in 0..300 {
                let a = median_release(q, &grid, 1.3, &mut Stream::new(seed).rng()).unwrap();
                let j = exponential_mechanism(&scores, 1.3, 1.0, &mut Stream::new(seed).rng()).unwrap();
                assert_eq!(a, grid.value(j));
            }
        }
    }

    #[test]
    fn tau_formula() {
        assert_eq!(median_tau(1.0, 10, 0.1).unwrap(), (4.0 * 100f64.ln()).ceil() as usize);
        assert!(median_tau(1.0, 10, 0.0).is_err());
    }

    #[test]
    fn constant_statistic_returns_constant() {
        let f = MonotoneStatistic::new(Constant(7.0)).with_range(Range::integers(10));
        let z = Dataset::from_scalars(&[0.0; 10]);
        let budget = PrivacyBudget::new(4.0, 0.2).unwrap();
        let beta = 0.1;
        let runs = 40;
        let hits = (0..runs)
            .filter(|&i| {
                let out = median_of_quantiles(&f, &z, &budget, beta, 0.2, Stream::new(i)).unwrap();
                out.value == Release::Value(7.0)
            })
            .count();
        assert!(hits as f64 >= (1.0 - beta) * runs as f64 - 3.0);
    }

    #[test]
    fn unbounded_range_is_a_contract_error() {
        let f = MonotoneStatistic::new(Count);
        let z = Dataset::from_scalars(&[0.0; 10]);
        let budget = PrivacyBudget::new(1.0, 0.1).unwrap();
        let err = median_of_quantiles(&f, &z, &budget, 0.1, 0.1, Stream::new(0)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    fn interleaved_pair(mut base: Vec<f64>, picks: &[f64]) -> (Vec<f64>, Vec<f64>) {
        base.sort_by(f64::total_cmp);
        let tau = base.len();
        // q'(s) drawn from [q(s−1), q(s+1)], then sorted
        let mut other: Vec<f64> = (0..tau)
            .map(|s| {
                let lo = if s == 0 { base[0] - 5.0 } else { base[s - 1] };
                let hi = if s + 1 == tau { base[tau - 1] + 5.0 } else { base[s + 1] };
                lo + picks[s] * (hi - lo)
            })
            .collect();
        other.sort_by(f64::total_cmp);
        (base, other)
    }

    proptest! {
        #[test]
        fn score_sensitivity_on_interleaved_lists(
            base in prop::collection::vec(-20f64..20.0, 3..30),
            picks in prop::collection::vec(0f64..1.0, 30),
            ys in prop::collection::vec(-30f64..30.0, 20),
        ) {
            let (q, qp) = interleaved_pair(base, &picks);
            for t in 0..q.len() - 2 {
                prop_assert!(qp[t] <= q[t + 1] && q[t + 1] <= qp[t + 2]);
            }
            for y in ys.into_iter().chain(q.iter().copied()).chain(qp.iter().copied()) {
                let d = (score_of(y, &q) - score_of(y, &qp)).abs();
                prop_assert!(d <= 1.0);
            }
        }

        #[test]
        fn output_always_on_grid(q in prop::collection::vec(-5f64..15.0, 1..20), seed in any::<u64>()) {
            let mut q = q;
            q.sort_by(f64::total_cmp);
            let grid = Grid::new(0.0, 1.0, 11).unwrap();
            let y = median_release(&q, &grid, 0.7, &mut Stream::new(seed).rng()).unwrap();
            prop_assert!(grid.index_of(y).is_some());
        }
    }
}
