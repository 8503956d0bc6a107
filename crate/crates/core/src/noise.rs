//! Laplace, truncated Laplace and exponential-mechanism sampling.
//!
//! All samplers use inverse-CDF transforms of a single uniform draw so that a
//! seeded stream replays exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("{epsilon} is not a positive real")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param("delta", format!("{delta} is outside [0, 1)")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    /// Budget scaled by `1/k` in both coordinates.
    pub fn split(&self, k: f64) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.epsilon / k,
            delta: self.delta / k,
        }
    }
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn sample_laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param("b", format!("Laplace scale {b} must be positive")));
    }
    let u = open_unit(rng) - 0.5;
    Ok(-b * u.signum() * (1.0 - 2.0 * u.abs()).ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedLaplace {
    pub scale: f64,
    pub bound: f64,
    /// `1/(1 − e^{−bound/scale})`.
    pub normalizer: f64,
}

impl TruncatedLaplace {
    pub fn new(scale: f64, bound: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("b", format!("scale {scale} must be positive")));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::param("bound", format!("bound {bound} must be positive")));
        }
        let mass = -(-bound / scale).exp_m1();
        Ok(TruncatedLaplace {
            scale,
            bound,
            normalizer: 1.0 / mass,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // |x| has density ∝ e^{-x/b} on [0, bound]; the sign is a fair coin
        // taken from the same uniform.
        let u = open_unit(rng);
        let (sign, v) = if u < 0.5 { (-1.0, 2.0 * u) } else { (1.0, 2.0 * u - 1.0) };
        let mass = -(-self.bound / self.scale).exp_m1();
        let x = -self.scale * (-v * mass).ln_1p();
        sign * x.clamp(0.0, self.bound)
    }

    /// `Pr[|X| ≤ x]`.
    pub fn abs_cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.bound);
        -(-x / self.scale).exp_m1() * self.normalizer
    }
}

pub fn sample_tlap<R: Rng + ?Sized>(b: f64, bound: f64, rng: &mut R) -> Result<f64> {
    Ok(TruncatedLaplace::new(b, bound)?.sample(rng))
}

fn check_em(eps: f64, sensitivity: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("epsilon", format!("{eps} is not a positive real")));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::param("sensitivity", format!("{sensitivity} is not a positive real")));
    }
    Ok(eps / (2.0 * sensitivity))
}

/// Sample index `i` with probability ∝ `exp(ε·scores[i]/(2Δ))`.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    scores: &[f64],
    eps: f64,
    sensitivity: f64,
    rng: &mut R,
) -> Result<usize> {
    let runs: Vec<(f64, u64)> = scores.iter().map(|&s| (s, 1)).collect();
    exponential_mechanism_runs(&runs, eps, sensitivity, rng).map(|(i, _)| i)
}

/// Exponential mechanism over a sequence of runs `(score, length)`: the
/// `length` consecutive candidates in a run share a score. Returns the run and
/// the offset within it. One uniform draw per call.
pub fn exponential_mechanism_runs<R: Rng + ?Sized>(
    runs: &[(f64, u64)],
    eps: f64,
    sensitivity: f64,
    rng: &mut R,
) -> Result<(usize, u64)> {
    let rate = check_em(eps, sensitivity)?;
    if runs.iter().all(|&(_, len)| len == 0) {
        return Err(Error::param("scores", "exponential mechanism needs at least one candidate"));
    }
    if let Some(&(s, _)) = runs.iter().find(|(s, _)| !s.is_finite()) {
        return Err(Error::param("scores", format!("non-finite score {s}")));
    }
    let max = runs
        .iter()
        .filter(|r| r.1 > 0)
        .map(|r| r.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = runs
        .iter()
        .map(|&(s, _)| (rate * (s - max)).exp())
        .collect();
    let total: f64 = runs.iter().zip(&weights).map(|(r, w)| r.1 as f64 * w).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, (&(_, len), &w)) in runs.iter().zip(&weights).enumerate() {
        if len == 0 {
            continue;
        }
        last = i;
        let mass = len as f64 * w;
        if target < acc + mass {
            let offset = (((target - acc) / w) as u64).min(len - 1);
            return Ok((i, offset));
        }
        acc += mass;
    }
    // floating-point slack at the top end
    Ok((last, runs[last].1 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Stream;
    use proptest::prelude::*;

    #[test]
    fn budget_validation() {
        assert!(PrivacyBudget::new(1.0, 0.0).is_ok());
        assert!(PrivacyBudget::new(0.0, 0.1).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(1.0, -0.1).is_err());
    }

    #[test]
    fn laplace_moments() {
        let mut rng = Stream::new(11).rng();
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_laplace(1.0, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 2.0).abs() < 0.05, "var {var}");
        let mid = n / 2;
        let (_, med, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
        assert!(med.abs() < 0.01, "median {med}");
        assert!(sample_laplace(0.0, &mut rng).is_err());
    }

    #[test]
    fn tlap_normalizer_and_mass() {
        let t = TruncatedLaplace::new(1.0, 2.0).unwrap();
        assert!((t.normalizer - 1.0 / (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        assert!((t.normalizer - 1.1565).abs() < 1e-4);
        let mut rng = Stream::new(12).rng();
        let n = 1_000_000;
        let mut inside = 0;
        for _ in 0..n {
            let x = t.sample(&mut rng);
            assert!(x.abs() <= 2.0);
            if x.abs() <= 1.0 {
                inside += 1;
            }
        }
        let want = (1.0 - (-1.0f64).exp()) / (1.0 - (-2.0f64).exp());
        let sd = (want * (1.0 - want) / n as f64).sqrt();
        assert!((inside as f64 / n as f64 - want).abs() < 5.0 * sd);
        assert!((t.abs_cdf(1.0) - want).abs() < 1e-12);
        assert!(TruncatedLaplace::new(1.0, 0.0).is_err());
        assert!(TruncatedLaplace::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn em_uniform_scores() {
        let mut rng = Stream::new(13).rng();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[exponential_mechanism(&[0.0, 0.0, 0.0], 1.0, 1.0, &mut rng).unwrap()] += 1;
        }
        // χ² with 2 degrees of freedom; 13.8 is the 0.999 quantile
        let e = n as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 13.8, "chi2 {chi2}");
    }

    #[test]
    fn em_dominant_score() {
        let mut rng = Stream::new(14).rng();
        let hits = (0..100_000)
            .filter(|_| exponential_mechanism(&[0.0, -100.0], 1.0, 1.0, &mut rng).unwrap() == 0)
            .count();
        assert_eq!(hits, 100_000);
    }

    #[test]
    fn em_rejects_bad_input() {
        let mut rng = Stream::new(15).rng();
        assert!(exponential_mechanism(&[], 1.0, 1.0, &mut rng).is_err());
        assert!(exponential_mechanism(&[f64::NAN], 1.0, 1.0, &mut rng).is_err());
        assert!(exponential_mechanism(&[0.0], 0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn em_runs_equal_expanded() {
        // a run of length k behaves like k copies of the score
        let runs = [(0.0, 3u64), (-1.0, 2), (0.5, 0), (-0.5, 4)];
        let flat: Vec<f64> = runs
            .iter()
            .flat_map(|&(s, k)| std::iter::repeat_n(s, k as usize))
            .collect();
        for seed in 0..500 {
            let (r, off) = exponential_mechanism_runs(&runs, 2.0, 1.0, &mut Stream::new(seed).rng()).unwrap();
            let idx = runs[..r].iter().map(|x| x.1).sum::<u64>() + off;
            let j = exponential_mechanism(&flat, 2.0, 1.0, &mut Stream::new(seed).rng()).unwrap();
            assert_eq!(idx as usize, j);
        }
    }

    proptest! {
        #[test]
        fn tlap_support(b in 1e-3f64..1e3, bound in 1e-3f64..1e3, seed in any::<u64>()) {
            let mut rng = Stream::new(seed).rng();
            for _ in 0..50 {
                prop_assert!(sample_tlap(b, bound, &mut rng).unwrap().abs() <= bound);
            }
        }

        #[test]
        fn em_shift_invariant(scores in prop::collection::vec(-64i32..64, 1..10),
                              shift in -32i32..32, seed in any::<u64>()) {
            let a: Vec<f64> = scores.iter().map(|&s| s as f64 / 4.0).collect();
            let b: Vec<f64> = a.iter().map(|s| s + shift as f64).collect();
            let i = exponential_mechanism(&a, 1.0, 1.0, &mut Stream::new(seed).rng()).unwrap();
            let j = exponential_mechanism(&b, 1.0, 1.0, &mut Stream::new(seed).rng()).unwrap();
            prop_assert_eq!(i, j);
        }
    }
}
