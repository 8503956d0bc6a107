//! Lower-bound hard instances and black-box group-privacy audits.
//!
//! Elements of a hard instance are distinct integer identifiers in `[0, M)`,
//! stored as one-coordinate points.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{median_of_quantiles, Release};
use crate::noise::PrivacyBudget;
use crate::statistic::{MonotoneStatistic, Range, Statistic};
use crate::stream::Stream;

/// Reproducible instance description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    #[serde(rename = "M")]
    pub universe: u64,
    pub t: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub threshold: usize,
    pub kappa: u32,
    pub tau: usize,
    pub seed: u64,
}

/// Largest universe for which membership uses a dense lookup table.
const DENSE_LIMIT: u64 = 1 << 26;

#[derive(Clone, Debug)]
enum Membership {
    Dense(Vec<u8>),
    Sparse(HashMap<u64, u8>),
}

impl Membership {
    /// 0 outside both supports, 1 in `B₀`, 2 in `B₁`.
    fn get(&self, id: u64) -> u8 {
        match self {
            Membership::Dense(v) => v.get(id as usize).copied().unwrap_or(0),
            Membership::Sparse(m) => m.get(&id).copied().unwrap_or(0),
        }
    }
}

/// The four-case step statistic: 0 below `N` elements, `y₀` inside `B₀`,
/// `y₁` inside `B₀ ∪ B₁`, `κ` otherwise.
#[derive(Clone, Debug)]
pub struct HardStatistic {
    threshold: usize,
    y0: u32,
    y1: u32,
    kappa: u32,
    membership: Membership,
}

impl Statistic for HardStatistic {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        if s.count() < self.threshold {
            return Ok(0.0);
        }
        let mut worst = 1;
        for z in s.points() {
            let id = z[0];
            let m = if id >= 0.0 && id.fract() == 0.0 {
                self.membership.get(id as u64)
            } else {
                0
            };
            match m {
                0 => return Ok(self.kappa as f64),
                2 => worst = 2,
                _ => {}
            }
        }
        Ok(if worst == 1 { self.y0 } else { self.y1 } as f64)
    }

    fn name(&self) -> &str {
        "hard_instance"
    }
}

#[derive(Clone, Debug)]
pub struct HardInstance {
    pub spec: HardInstanceSpec,
    pub b0: Vec<u64>,
    pub b1: Vec<u64>,
    pub y0: u32,
    pub y1: u32,
    /// `τ` elements from `B₁`, the rest from `B₀`.
    pub x: Dataset,
    /// `x` with its `B₁` elements replaced by fresh `B₀` elements.
    pub x_prime: Dataset,
    pub statistic: HardStatistic,
}

impl HardInstance {
    /// The step statistic with its integer range `{0, …, κ}`.
    pub fn monotone_statistic(&self, query_cap: Option<u64>) -> MonotoneStatistic {
        MonotoneStatistic::new(self.statistic.clone())
            .with_range(Range::integers(self.spec.kappa as usize))
            .with_query_cap(query_cap)
    }
}

pub fn make_hard_instance(spec: HardInstanceSpec) -> Result<HardInstance> {
    let HardInstanceSpec {
        universe,
        t,
        n,
        threshold,
        kappa,
        tau,
        seed,
    } = spec;
    let fail = |msg: String| Err(Error::Config(msg));
    if 4 * (n as u128) * (n as u128) > t as u128 {
        return fail(format!("need 4n² ≤ t, got n = {n}, t = {t}"));
    }
    if 4 * t as u128 > universe as u128 {
        return fail(format!("need 4t ≤ M, got t = {t}, M = {universe}"));
    }
    if tau > n {
        return fail(format!("need tau ≤ n, got tau = {tau}, n = {n}"));
    }
    if threshold == 0 || threshold > n {
        return fail(format!("need 1 ≤ N ≤ n, got N = {threshold}"));
    }
    if kappa < 2 {
        return fail(format!("need kappa ≥ 2, got {kappa}"));
    }
    if universe > (1u64 << 53) {
        return fail("universe exceeds exactly representable identifiers".into());
    }
    let mut rng = Stream::new(seed).child("hard-instance", 0).rng();
    let ids = index::sample(&mut rng, universe as usize, 2 * t);
    let ids: Vec<u64> = ids.iter().map(|i| i as u64).collect();
    let (b0, b1) = (ids[..t].to_vec(), ids[t..].to_vec());
    let y0 = rng.random_range(1..=kappa / 2);
    let y1 = rng.random_range(kappa / 2 + 1..=kappa);

    let mut x: Vec<f64> = b1[..tau].iter().map(|&i| i as f64).collect();
    x.extend(b0[..n - tau].iter().map(|&i| i as f64));
    let mut xp: Vec<f64> = b0[n - tau..n].iter().map(|&i| i as f64).collect();
    xp.extend_from_slice(&x[tau..]);

    let membership = if universe <= DENSE_LIMIT {
        let mut table = vec![0u8; universe as usize];
        b0.iter().for_each(|&i| table[i as usize] = 1);
        b1.iter().for_each(|&i| table[i as usize] = 2);
        Membership::Dense(table)
    } else {
        Membership::Sparse(b0.iter().map(|&i| (i, 1)).chain(b1.iter().map(|&i| (i, 2))).collect())
    };
    Ok(HardInstance {
        spec,
        b0,
        b1,
        y0,
        y1,
        x: Dataset::from_scalars(&x),
        x_prime: Dataset::from_scalars(&xp),
        statistic: HardStatistic {
            threshold,
            y0,
            y1,
            kappa,
            membership,
        },
    })
}

/// One mechanism invocation as seen by the auditor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditSample {
    pub value: Release,
    pub queries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditBin {
    pub label: String,
    pub count_x: u64,
    pub count_x_prime: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub min: u64,
    pub median: u64,
    pub mean: f64,
    pub max: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub runs: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub tau: usize,
    pub y1: u32,
    pub bins: Vec<AuditBin>,
    /// `Pr̂[M(X) ∈ E]` for `E = {|out − y₁| < 1/2}`.
    pub group_inequality_lhs: f64,
    /// `e^{ετ}·(Pr̂[M(X′) ∈ E] + δ/ε)`.
    pub group_inequality_rhs: f64,
    pub confidence_slack: f64,
    pub violation: bool,
    /// Largest smoothed log-ratio over output bins (diagnostic only).
    pub empirical_epsilon: f64,
    pub queries_per_call: QueryStats,
}

const ERROR_BIN: &str = "error";
const BOTTOM_BIN: &str = "bottom";

fn bin_label(out: &Result<AuditSample>) -> String {
    match out {
        Err(_) => ERROR_BIN.into(),
        Ok(AuditSample { value: Release::Bottom, .. }) => BOTTOM_BIN.into(),
        Ok(AuditSample { value: Release::Value(v), .. }) => format!("{}", v.round()),
    }
}

fn in_event(out: &Result<AuditSample>, y1: f64) -> bool {
    matches!(out, Ok(AuditSample { value: Release::Value(v), .. }) if (v - y1).abs() < 0.5)
}

/// Run `mech` on both inputs of the instance and compare output frequencies
/// against the group-privacy inequality at distance `τ`.
pub fn audit_group_privacy<M>(
    mech: M,
    inst: &HardInstance,
    runs: usize,
    eps: f64,
    delta: f64,
    stream: Stream,
) -> Result<AuditReport>
where
    M: Fn(&Dataset, Stream) -> Result<AuditSample> + Sync,
{
    if runs == 0 {
        return Err(Error::param("runs", "need at least one run"));
    }
    let pairs: Vec<(Result<AuditSample>, Result<AuditSample>)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            (
                mech(&inst.x, stream.child("audit-x", i)),
                mech(&inst.x_prime, stream.child("audit-x-prime", i)),
            )
        })
        .collect();

    let mut bins: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let (mut hit_x, mut hit_xp) = (0u64, 0u64);
    let mut queries = Vec::with_capacity(2 * runs);
    let y1 = inst.y1 as f64;
    for (a, b) in &pairs {
        bins.entry(bin_label(a)).or_default().0 += 1;
        bins.entry(bin_label(b)).or_default().1 += 1;
        hit_x += u64::from(in_event(a, y1));
        hit_xp += u64::from(in_event(b, y1));
        queries.extend([a, b].into_iter().filter_map(|r| r.as_ref().ok().map(|s| s.queries)));
    }

    let r = runs as f64;
    let (px, pxp) = (hit_x as f64 / r, hit_xp as f64 / r);
    let group = (eps * inst.spec.tau as f64).exp();
    let lhs = px;
    let rhs = group * (pxp + delta / eps);
    let se = |p: f64| (p * (1.0 - p) / r).sqrt();
    let slack = 3.0 * (se(px) + group * se(pxp));
    let empirical_epsilon = bins
        .values()
        .map(|&(a, b)| ((a as f64 + 1.0) / (b as f64 + 1.0)).ln().abs())
        .fold(0.0, f64::max);

    queries.sort_unstable();
    let stats = if queries.is_empty() {
        QueryStats { min: 0, median: 0, mean: 0.0, max: 0 }
    } else {
        QueryStats {
            min: queries[0],
            median: queries[(queries.len() - 1) / 2],
            mean: queries.iter().sum::<u64>() as f64 / queries.len() as f64,
            max: *queries.last().unwrap(),
        }
    };
    Ok(AuditReport {
        runs,
        epsilon: eps,
        delta,
        tau: inst.spec.tau,
        y1: inst.y1,
        bins: bins
            .into_iter()
            .map(|(label, (count_x, count_x_prime))| AuditBin { label, count_x, count_x_prime })
            .collect(),
        group_inequality_lhs: lhs,
        group_inequality_rhs: rhs,
        confidence_slack: slack,
        violation: lhs > rhs + slack,
        empirical_epsilon,
        queries_per_call: stats,
    })
}

/// Non-private mechanism releasing `f(Z)`.
pub fn plug_in_mechanism(inst: &HardInstance) -> impl Fn(&Dataset, Stream) -> Result<AuditSample> + Sync + '_ {
    move |z, _| {
        Ok(AuditSample {
            value: Release::Value(inst.statistic.evaluate(z)?),
            queries: 1,
        })
    }
}

/// Input-independent mechanism.
pub fn constant_mechanism(value: f64) -> impl Fn(&Dataset, Stream) -> Result<AuditSample> + Sync {
    move |_, _| {
        Ok(AuditSample {
            value: Release::Value(value),
            queries: 0,
        })
    }
}

/// Median of quantiles on the instance's step statistic.
pub fn median_mechanism(
    inst: &HardInstance,
    budget: PrivacyBudget,
    beta: f64,
    p: f64,
    query_cap: Option<u64>,
) -> impl Fn(&Dataset, Stream) -> Result<AuditSample> + Sync + '_ {
    move |z, s| {
        let f = inst.monotone_statistic(query_cap);
        let out = median_of_quantiles(&f, z, &budget, beta, p, s)?;
        Ok(AuditSample {
            value: out.value,
            queries: f.query_count(),
        })
    }
}

/// Group distance `⌈(1/2ε)·ln(min(κ/β, ε/δ))⌉`, at least 1.
pub fn group_distance(eps: f64, kappa: u32, beta: f64, delta: f64) -> usize {
    let v = (kappa as f64 / beta).min(eps / delta).ln() / (2.0 * eps);
    (v.ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistic::tests::assert_monotone_on_subsets;

    fn spec(seed: u64) -> HardInstanceSpec {
        HardInstanceSpec {
            universe: 4000,
            t: 1000,
            n: 8,
            threshold: 3,
            kappa: 16,
            tau: 2,
            seed,
        }
    }

    #[test]
    fn construction_properties() {
        let inst = make_hard_instance(spec(1)).unwrap();
        let f = &inst.statistic;
        assert!(inst.b0.iter().all(|i| !inst.b1.contains(i)));
        assert!((1..=8).contains(&inst.y0) && (9..=16).contains(&inst.y1));
        assert_eq!(f.evaluate(&inst.x_prime).unwrap(), inst.y0 as f64);
        assert_eq!(f.evaluate(&inst.x).unwrap(), inst.y1 as f64);
        let small = inst.x.masked(&[true, true, false, false, false, false, false, false]).unwrap();
        assert_eq!(f.evaluate(&small).unwrap(), 0.0);
        let outsider = inst.x.replace(3, Some(&[(0..4000u64).find(|i| !inst.b0.contains(i) && !inst.b1.contains(i)).unwrap() as f64])).unwrap();
        assert_eq!(f.evaluate(&outsider).unwrap(), 16.0);
        // X and X′ differ in exactly τ slots, and all elements are distinct
        let diff = (0..8).filter(|&j| inst.x.point(j) != inst.x_prime.point(j)).count();
        assert_eq!(diff, 2);
        let mut all: Vec<u64> = inst.x.points().chain(inst.x_prime.points()).map(|p| p[0] as u64).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 10);
        assert!(inst.x_prime.points().all(|p| inst.b0.contains(&(p[0] as u64))));
    }

    #[test]
    fn determinism_and_sparse_membership() {
        let a = make_hard_instance(spec(5)).unwrap();
        let b = make_hard_instance(spec(5)).unwrap();
        assert_eq!((a.b0, a.b1, a.y0, a.y1), (b.b0.clone(), b.b1.clone(), b.y0, b.y1));
        assert_eq!(a.x, b.x);
        let big = make_hard_instance(HardInstanceSpec { universe: 1 << 30, ..spec(5) }).unwrap();
        assert!(matches!(big.statistic.membership, Membership::Sparse(_)));
        assert_eq!(big.statistic.evaluate(&big.x).unwrap(), big.y1 as f64);
    }

    #[test]
    fn constraint_violations() {
        let bad = |s: HardInstanceSpec, needle: &str| match make_hard_instance(s) {
            Err(Error::Config(msg)) => assert!(msg.contains(needle), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        };
        bad(HardInstanceSpec { t: 100, ..spec(0) }, "4n² ≤ t");
        bad(HardInstanceSpec { universe: 3000, ..spec(0) }, "4t ≤ M");
        bad(HardInstanceSpec { tau: 9, ..spec(0) }, "tau ≤ n");
    }

    #[test]
    fn step_statistic_is_monotone() {
        for seed in 0..10 {
            let inst = make_hard_instance(spec(seed)).unwrap();
            assert_monotone_on_subsets(&inst.statistic, &inst.x, 0.0);
            assert_monotone_on_subsets(&inst.statistic, &inst.x_prime, 0.0);
            // mixed dataset reaching the κ case
            let mixed = inst.x.replace(0, Some(&[*inst.b0.iter().chain(&inst.b1).max().unwrap() as f64 + 0.5])).unwrap();
            assert_monotone_on_subsets(&inst.statistic, &mixed, 0.0);
        }
    }

    #[test]
    fn plug_in_is_flagged_and_constant_is_not() {
        let inst = make_hard_instance(spec(2)).unwrap();
        let rep = audit_group_privacy(plug_in_mechanism(&inst), &inst, 1000, 1.0, 0.01, Stream::new(3)).unwrap();
        assert_eq!(rep.group_inequality_lhs, 1.0);
        assert!(rep.violation);
        let total: u64 = rep.bins.iter().map(|b| b.count_x).sum();
        assert_eq!(total, 1000);
        let rep = audit_group_privacy(constant_mechanism(inst.y1 as f64), &inst, 1000, 1.0, 0.01, Stream::new(3)).unwrap();
        assert!(!rep.violation);
        assert_eq!(rep.empirical_epsilon, 0.0);
    }

    #[test]
    fn group_distance_formula() {
        assert_eq!(group_distance(4.0, 16, 0.1, 0.05), 1);
        assert_eq!(group_distance(0.5, 16, 0.1, 1e-6), (160f64.ln()).ceil() as usize);
    }
}
