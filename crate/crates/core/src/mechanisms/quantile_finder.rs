//! Subsampled quantile lists.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{quantile_rank, select_order_statistics, Dataset};
use crate::error::{Error, Result};
use crate::statistic::{check_cap, MonotoneStatistic, StatisticFamily};
use crate::stream::Stream;

/// Draws are generated in fixed-size blocks, each from its own child stream,
/// so results do not depend on how blocks are scheduled across threads.
pub const DRAW_BLOCK: usize = 4096;

/// Largest sample count we are willing to allocate for.
const MAX_SAMPLES: f64 = 4.0e9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileFinderConfig {
    pub p: f64,
    pub tau: usize,
    pub delta: f64,
    pub gamma: f64,
}

impl QuantileFinderConfig {
    /// Config with the default `γ = p/2`.
    pub fn new(p: f64, tau: usize, delta: f64) -> Result<Self> {
        Self::with_gamma(p, tau, delta, p / 2.0)
    }

    pub fn with_gamma(p: f64, tau: usize, delta: f64, gamma: f64) -> Result<Self> {
        let cfg = QuantileFinderConfig { p, tau, delta, gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 0.25) {
            return Err(Error::param("p", format!("{} is outside (0, 1/4)", self.p)));
        }
        if self.tau == 0 {
            return Err(Error::param("tau", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta", format!("{} is outside (0, 1)", self.delta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param("gamma", format!("{} is outside (0, 1)", self.gamma)));
        }
        Ok(())
    }

    /// `η = ((1−p)/(1+γ))^τ`.
    pub fn eta(&self) -> f64 {
        ((1.0 - self.p) / (1.0 + self.gamma)).powi(self.tau as i32)
    }

    /// Unrounded sample count `2·ln(2/δ)/(η·γ·(1−γ²)·(1−p))²`.
    pub fn m_real(&self) -> f64 {
        let g = self.gamma;
        let width = self.eta() * g * (1.0 - g * g) * (1.0 - self.p);
        2.0 * (2.0 / self.delta).ln() / (width * width)
    }

    pub fn m(&self) -> Result<u64> {
        let m = self.m_real().ceil();
        if !m.is_finite() || m > MAX_SAMPLES {
            return Err(Error::Config(format!(
                "sample count m = {m:.4e} is too large (p = {}, tau = {}, delta = {})",
                self.p, self.tau, self.delta
            )));
        }
        Ok((m as u64).max(1))
    }

    /// Quantile level of `q(t)`, `((1+γ)/(1−p))^t·η`, for `t = 1..=τ`.
    pub fn level(&self, t: usize) -> f64 {
        let ratio = (1.0 - self.p) / (1.0 + self.gamma);
        // written relative to t = τ so that the top level is exactly η/η
        ratio.powi((self.tau - t) as i32) * (self.eta() / ratio.powi(self.tau as i32))
    }

    fn levels(&self) -> Result<Vec<f64>> {
        let levels: Vec<f64> = (1..=self.tau).map(|t| self.level(t)).collect();
        let top = levels[self.tau - 1];
        if top > 1.0 + 1e-9 {
            return Err(Error::Config(format!("quantile level {top} exceeds 1")));
        }
        Ok(levels)
    }
}

/// `q(1) ≤ … ≤ q(τ)` together with the sampled range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileList {
    pub q: Vec<f64>,
    pub config: QuantileFinderConfig,
    pub m: u64,
    pub sample_min: f64,
    pub sample_max: f64,
}

impl QuantileList {
    pub fn tau(&self) -> usize {
        self.q.len()
    }

    /// `q(t)` with 1-based `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.q[t - 1]
    }
}

/// Run the quantile finder on one statistic.
pub fn quantile_finder(
    f: &MonotoneStatistic,
    z: &Dataset,
    cfg: &QuantileFinderConfig,
    stream: Stream,
) -> Result<QuantileList> {
    cfg.validate()?;
    let m = cfg.m()?;
    let levels = cfg.levels()?;
    f.check_budget(m)?;
    let inner = f.inner();
    let mut cols = draw(z, cfg.p, m, stream, 1, |s, out| {
        out[0] = inner.evaluate(s)?;
        Ok(())
    })?;
    f.record_queries(m);
    list_from_samples(&mut cols[0], cfg, m, &levels)
}

/// Run the quantile finder on every member of a family, sharing subsamples.
/// Each member's list is distributed exactly as a standalone run.
pub fn quantile_finder_family(
    family: &dyn StatisticFamily,
    z: &Dataset,
    cfg: &QuantileFinderConfig,
    stream: Stream,
    query_cap: Option<u64>,
) -> Result<Vec<QuantileList>> {
    cfg.validate()?;
    let m = cfg.m()?;
    let levels = cfg.levels()?;
    let k = family.size();
    check_cap(0, m.saturating_mul(k as u64), query_cap)?;
    family.check_budget(m)?;
    let mut cols = draw(z, cfg.p, m, stream, k, |s, out| family.evaluate_into(s, out))?;
    family.record_queries(m);
    cols.iter_mut()
        .map(|c| list_from_samples(c, cfg, m, &levels))
        .collect()
}

/// Evaluate `eval` on `m` subsamples; returns one column per family member.
pub(crate) fn draw<F>(z: &Dataset, p: f64, m: u64, stream: Stream, k: usize, eval: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Dataset, &mut [f64]) -> Result<()> + Sync,
{
    let m = m as usize;
    let blocks = m.div_ceil(DRAW_BLOCK);
    // each block is column-major: member c occupies out[c * len..(c + 1) * len]
    let blocks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = DRAW_BLOCK.min(m - b * DRAW_BLOCK);
            let mut rng = stream.child("subsample-block", b as u64).rng();
            let mut scratch = z.clone();
            let mut row = vec![0.0; k];
            let mut out = vec![0.0; len * k];
            for i in 0..len {
                z.subsample_into(p, &mut rng, &mut scratch);
                eval(&scratch, &mut row)?;
                for (c, &v) in row.iter().enumerate() {
                    out[c * len + i] = v;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut cols: Vec<Vec<f64>> = (0..k).map(|_| Vec::with_capacity(m)).collect();
    for block in &blocks {
        let len = block.len() / k;
        for (c, col) in cols.iter_mut().enumerate() {
            col.extend_from_slice(&block[c * len..(c + 1) * len]);
        }
    }
    Ok(cols)
}

fn list_from_samples(values: &mut [f64], cfg: &QuantileFinderConfig, m: u64, levels: &[f64]) -> Result<QuantileList> {
    if values.is_empty() {
        return Err(Error::NoSamples);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Contract("statistic returned NaN".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let ranks: Vec<usize> = levels.iter().map(|&v| quantile_rank(v, values.len()) - 1).collect();
    let q = select_order_statistics(values, &ranks);
    debug_assert!(q.windows(2).all(|w| w[0] <= w[1]));
    assert!(lo <= q[0] && q[q.len() - 1] <= hi, "quantiles escaped the sampled range");
    Ok(QuantileList {
        q,
        config: *cfg,
        m,
        sample_min: lo,
        sample_max: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::EmpiricalDistribution;
    use crate::statistic::{Constant, Count, Family, NonnegativeSum};

    #[test]
    fn eta_and_m_reference_values() {
        let cfg = QuantileFinderConfig::new(0.1, 10, 0.1).unwrap();
        assert_eq!(cfg.gamma, 0.05);
        let eta = (0.9f64 / 1.05).powi(10);
        assert!((cfg.eta() - eta).abs() < 1e-15);
        assert!((cfg.eta() - 0.2140).abs() < 2e-4);
        // DKW: 2·exp(−2·m·ε²) ≤ δ with ε = γ(1−γ²)(1−p)η/2
        let e = 0.05 * (1.0 - 0.0025) * 0.9 * eta / 2.0;
        let m_dkw = ((2.0f64 / 0.1).ln() / (2.0 * e * e)).ceil() as u64;
        assert_eq!(cfg.m().unwrap(), m_dkw);
        assert!((6.0e4..7.0e4).contains(&(m_dkw as f64)));
    }

    #[test]
    fn top_level_is_one() {
        for tau in [1, 7, 20, 64] {
            let cfg = QuantileFinderConfig::new(0.2, tau, 0.1).unwrap();
            assert!((cfg.level(tau) - 1.0).abs() < 1e-12);
            assert!((cfg.level(1) - cfg.eta() * 1.1 / 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(QuantileFinderConfig::new(0.25, 5, 0.1).is_err());
        assert!(QuantileFinderConfig::new(0.1, 0, 0.1).is_err());
        assert!(QuantileFinderConfig::new(0.1, 5, 0.0).is_err());
        let huge = QuantileFinderConfig::new(0.24, 400, 1e-9).unwrap();
        assert!(matches!(huge.m(), Err(Error::Config(_))));
    }

    #[test]
    fn constant_statistic_gives_constant_list() {
        let f = MonotoneStatistic::new(Constant(7.0));
        let z = Dataset::from_scalars(&[1.0; 20]);
        let cfg = QuantileFinderConfig::new(0.2, 4, 0.5).unwrap();
        let l = quantile_finder(&f, &z, &cfg, Stream::new(1)).unwrap();
        assert_eq!(l.q, vec![7.0; 4]);
        assert_eq!(f.query_count(), cfg.m().unwrap());
    }

    #[test]
    fn matches_sorted_empirical_distribution() {
        let z = Dataset::from_scalars(&(0..40).map(|i| i as f64 * 0.5).collect::<Vec<_>>());
        let cfg = QuantileFinderConfig::new(0.2, 6, 0.3).unwrap();
        let f = MonotoneStatistic::new(NonnegativeSum { column: 0 });
        let list = quantile_finder(&f, &z, &cfg, Stream::new(3)).unwrap();
        let cols = draw(&z, cfg.p, cfg.m().unwrap(), Stream::new(3), 1, |s, o| {
            o[0] = NonnegativeSum { column: 0 }.evaluate(s)?;
            Ok(())
        })
        .unwrap();
        let d = EmpiricalDistribution::new(cols[0].clone()).unwrap();
        for t in 1..=cfg.tau {
            assert_eq!(list.at(t), d.quantile(cfg.level(t)).unwrap());
        }
        assert_eq!(list.sample_min, d.sorted_values()[0]);
        assert_eq!(list.sample_max, *d.sorted_values().last().unwrap());
    }

    use crate::statistic::Statistic;

    #[test]
    fn family_matches_individual_runs() {
        let z = Dataset::from_rows(&(0..30).map(|i| vec![i as f64, 1.0]).collect::<Vec<_>>()).unwrap();
        let cfg = QuantileFinderConfig::new(0.15, 5, 0.3).unwrap();
        let fam = Family(vec![
            MonotoneStatistic::new(Count),
            MonotoneStatistic::new(NonnegativeSum { column: 0 }),
        ]);
        let lists = quantile_finder_family(&fam, &z, &cfg, Stream::new(8), None).unwrap();
        for (f, l) in fam.0.iter().zip(&lists) {
            let solo = quantile_finder(f, &z, &cfg, Stream::new(8)).unwrap();
            assert_eq!(&solo, l);
        }
    }

    #[test]
    fn query_cap_fails_before_drawing() {
        let f = MonotoneStatistic::new(Count).with_query_cap(Some(10));
        let z = Dataset::from_scalars(&[1.0; 5]);
        let cfg = QuantileFinderConfig::new(0.1, 3, 0.1).unwrap();
        let err = quantile_finder(&f, &z, &cfg, Stream::new(1)).unwrap_err();
        assert!(matches!(err, Error::QueryCapExceeded { cap: 10, .. }));
        assert_eq!(f.query_count(), 0);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let z = Dataset::from_scalars(&(0..60).map(|i| i as f64).collect::<Vec<_>>());
        let cfg = QuantileFinderConfig::new(0.1, 6, 0.2).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| quantile_finder(&MonotoneStatistic::new(NonnegativeSum { column: 0 }), &z, &cfg, Stream::new(4)).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
