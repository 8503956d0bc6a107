//! Random-design linear regression: data generation, least squares with a
//! fixed loss denominator, the profile loss with the first coefficient pinned,
//! and Monte Carlo validators for the task's concentration properties.
//!
//! Rows are `(x_1, …, x_d, y)`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::statistic::Statistic;
use crate::stream::Stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaSpec {
    Identity,
    Diag(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub d: usize,
    pub s: f64,
    pub theta: Vec<f64>,
    pub sigma: SigmaSpec,
}

/// A validated model with its covariance factor.
#[derive(Clone, Debug)]
pub struct RegressionTask {
    pub model: RegressionModel,
    sigma: DMatrix<f64>,
    chol: DMatrix<f64>,
    mu: f64,
}

impl RegressionTask {
    pub fn new(model: RegressionModel) -> Result<Self> {
        let d = model.d;
        if d == 0 {
            return Err(Error::param("d", "dimension must be positive"));
        }
        if model.theta.len() != d {
            return Err(Error::param("theta", format!("length {} differs from d = {d}", model.theta.len())));
        }
        if !(model.s >= 0.0 && model.s.is_finite()) {
            return Err(Error::param("s", format!("noise level {} must be nonnegative", model.s)));
        }
        let sigma = match &model.sigma {
            SigmaSpec::Identity => DMatrix::identity(d, d),
            SigmaSpec::Diag(v) if v.len() == d => DMatrix::from_diagonal(&DVector::from_vec(v.clone())),
            SigmaSpec::Dense(rows) if rows.len() == d && rows.iter().all(|r| r.len() == d) => {
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
            _ => return Err(Error::param("sigma", format!("shape does not match d = {d}"))),
        };
        if (&sigma - sigma.transpose()).abs().max() > 1e-12 * sigma.abs().max().max(1.0) {
            return Err(Error::param("sigma", "covariance is not symmetric"));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::param("sigma", "covariance is not positive definite"))?;
        let inv = chol.inverse();
        let mu = 1.0 / inv[(0, 0)];
        Ok(RegressionTask {
            model,
            chol: chol.l(),
            sigma,
            mu,
        })
    }

    pub fn d(&self) -> usize {
        self.model.d
    }

    /// `μ = 1/(Σ⁻¹)₁₁`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Population loss of the true parameter, `s²`.
    pub fn population_loss(&self) -> f64 {
        self.model.s * self.model.s
    }
}

/// `n` rows with `x = L·g` (`L Lᵀ = Σ`, `g` standard normal) and `y = ⟨x, θ⟩ + s·η`.
pub fn generate(task: &RegressionTask, n: usize, stream: Stream) -> Dataset {
    let d = task.d();
    let mut rng = stream.child("regression-rows", 0).rng();
    let mut flat = Vec::with_capacity(n * (d + 1));
    let mut g = vec![0.0; d];
    for _ in 0..n {
        for gi in g.iter_mut() {
            *gi = StandardNormal.sample(&mut rng);
        }
        let mut y = 0.0;
        for i in 0..d {
            let xi: f64 = (0..=i).map(|j| task.chol[(i, j)] * g[j]).sum();
            flat.push(xi);
            y += xi * task.model.theta[i];
        }
        let eta: f64 = StandardNormal.sample(&mut rng);
        flat.push(y + task.model.s * eta);
    }
    Dataset::from_flat(d + 1, flat).expect("row width is d + 1")
}

/// `RSS(w) = a·w² − 2·b·w + c`: residual sum of squares with the first
/// coefficient pinned to `w` and the others minimized out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ProfileQuadratic {
    /// Minimum RSS over all coefficients.
    pub fn min_rss(&self) -> f64 {
        if self.a > 0.0 {
            (self.c - self.b * self.b / self.a).max(0.0)
        } else {
            self.c.max(0.0)
        }
    }

    /// Minimizing first coefficient (0 when it is not identified).
    pub fn argmin(&self) -> f64 {
        if self.a > 0.0 {
            self.b / self.a
        } else {
            0.0
        }
    }

    /// `min_{w ∈ [lo, hi]} RSS(w)`.
    pub fn min_rss_on(&self, lo: f64, hi: f64) -> f64 {
        let gap = distance_to_interval(self.argmin(), lo, hi);
        self.min_rss() + self.a * gap * gap
    }
}

/// `Δ(w, [lo, hi]) = min_{w′ ∈ [lo, hi]} |w − w′|`.
pub fn distance_to_interval(w: f64, lo: f64, hi: f64) -> f64 {
    (lo - w).max(w - hi).max(0.0)
}

const PIVOT_TOL: f64 = 1e-11;

/// Profile quadratic of the present rows, from the augmented Gram matrix of
/// `(x_2..x_d, x_1, y)` by symmetric elimination of the `x_2..x_d` block.
/// Pivots that are negligible relative to their original diagonal are
/// dropped, which gives the minimum-norm solution on rank-deficient data.
pub fn profile_quadratic(s: &Dataset, d: usize) -> ProfileQuadratic {
    let k = d + 1;
    let mut stack = [0.0f64; 25];
    let mut heap;
    let m: &mut [f64] = if k * k <= stack.len() {
        &mut stack[..k * k]
    } else {
        heap = vec![0.0; k * k];
        &mut heap
    };
    // column order: x_2..x_d, x_1, y
    let mut row_stack = [0.0f64; 5];
    let mut row_heap;
    let row: &mut [f64] = if k <= row_stack.len() {
        &mut row_stack[..k]
    } else {
        row_heap = vec![0.0; k];
        &mut row_heap
    };
    for z in s.points() {
        row[..d - 1].copy_from_slice(&z[1..d]);
        row[d - 1] = z[0];
        row[d] = z[d];
        for r in 0..k {
            let zr = row[r];
            for (cell, &zc) in m[r * k..r * k + r + 1].iter_mut().zip(&row[..=r]) {
                *cell += zr * zc;
            }
        }
    }
    let mut diag_stack = [0.0f64; 10];
    let mut diag_heap;
    let diag: &mut [f64] = if k <= diag_stack.len() {
        &mut diag_stack[..k]
    } else {
        diag_heap = vec![0.0; k];
        &mut diag_heap
    };
    for (j, v) in diag.iter_mut().enumerate() {
        *v = m[j * k + j];
    }
    for j in 0..d - 1 {
        let piv = m[j * k + j];
        if !(piv > PIVOT_TOL * diag[j]) || piv <= 0.0 {
            continue;
        }
        for r in j + 1..k {
            let f = m[r * k + j] / piv;
            if f == 0.0 {
                continue;
            }
            for c in j + 1..=r {
                m[r * k + c] -= f * m[c * k + j];
            }
        }
    }
    let (ia, ic) = (d - 1, d);
    let mut a = m[ia * k + ia];
    let mut b = m[ic * k + ia];
    if !(a > PIVOT_TOL * diag[ia]) {
        a = 0.0;
        b = 0.0;
    }
    ProfileQuadratic {
        a,
        b,
        c: m[ic * k + ic],
    }
}

/// `L(S) = (1/n)·min_θ Σ_{present} (y − ⟨x, θ⟩)²` with a fixed denominator.
#[derive(Clone, Copy, Debug)]
pub struct RegressionLoss {
    pub d: usize,
    pub denom: f64,
}

impl RegressionLoss {
    pub fn new(d: usize, n: usize) -> Self {
        RegressionLoss { d, denom: n as f64 }
    }

    pub fn profile(&self, s: &Dataset) -> ProfileQuadratic {
        profile_quadratic(s, self.d)
    }
}

impl Statistic for RegressionLoss {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        Ok(self.profile(s).min_rss() / self.denom)
    }

    fn name(&self) -> &str {
        "regression_loss"
    }
}

#[derive(Clone, Debug)]
pub struct OlsSolution {
    pub theta_hat: Vec<f64>,
    /// `L(Z)`.
    pub residual_loss: f64,
    /// `(I − P_{X₋₁})·x^{(1)}` over the present rows.
    pub residualized_column: Vec<f64>,
    /// `vᵀv/n`.
    pub c_z: f64,
    pub denom: f64,
    gram_inv: DMatrix<f64>,
}

/// Ordinary least squares on the present rows with loss denominator `denom`.
pub fn fit_ols(z: &Dataset, d: usize, denom: usize) -> Result<OlsSolution> {
    if z.width() != d + 1 {
        return Err(Error::param("d", format!("rows have width {}, expected {}", z.width(), d + 1)));
    }
    let rows = z.count();
    if rows < d {
        return Err(Error::SingularGram { condition: f64::INFINITY });
    }
    let x = DMatrix::from_fn(rows, d, |i, j| z.point(z.members()[i] as usize).unwrap()[j]);
    let y = DVector::from_fn(rows, |i, _| z.point(z.members()[i] as usize).unwrap()[d]);
    let gram = x.transpose() * &x;
    let ev = gram.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::SingularGram { condition });
    }
    let chol = gram.clone().cholesky().ok_or(Error::SingularGram { condition })?;
    let theta = chol.solve(&(x.transpose() * &y));
    let resid = &y - &x * &theta;
    let n = denom as f64;
    let loss = resid.norm_squared() / n;

    let x1 = x.column(0).into_owned();
    let v = if d == 1 {
        x1
    } else {
        let rest = x.columns(1, d - 1).into_owned();
        let g_rest = rest.transpose() * &rest;
        let coef = g_rest
            .cholesky()
            .ok_or(Error::SingularGram { condition })?
            .solve(&(rest.transpose() * &x1));
        &x1 - rest * coef
    };
    let c_z = v.norm_squared() / n;
    Ok(OlsSolution {
        theta_hat: theta.iter().copied().collect(),
        residual_loss: loss,
        residualized_column: v.iter().copied().collect(),
        c_z,
        denom: n,
        gram_inv: chol.inverse(),
    })
}

impl OlsSolution {
    pub fn theta1(&self) -> f64 {
        self.theta_hat[0]
    }

    /// `L^{(w)}(Z) = L(Z) + c_Z·(w − θ̂₁)²`.
    pub fn profile_loss(&self, w: f64) -> f64 {
        let g = w - self.theta1();
        self.residual_loss + self.c_z * g * g
    }

    /// Leverage `h = xᵀ(XᵀX)⁻¹x` of a row.
    pub fn leverage(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        (x.transpose() * &self.gram_inv * &x)[(0, 0)]
    }

    /// `L(Z) − L(Z₋ᵢ) = r_i²/((1 − h_i)·n)` for a row `(x, y)` of the fit.
    pub fn leave_one_out_gap(&self, row: &[f64]) -> f64 {
        let d = self.theta_hat.len();
        let (x, y) = (&row[..d], row[d]);
        let r = y - x.iter().zip(&self.theta_hat).map(|(a, b)| a * b).sum::<f64>();
        let h = self.leverage(x);
        r * r / ((1.0 - h) * self.denom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub failures: usize,
    pub reps: usize,
    pub rate: f64,
    /// Allowed failure probability.
    pub bound: f64,
    /// Allowed rate including three binomial standard errors.
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, failures: usize, reps: usize, bound: f64) -> Check {
        let rate = failures as f64 / reps as f64;
        let threshold = bound + 3.0 * (bound * (1.0 - bound) / reps as f64).sqrt();
        Check {
            name: name.into(),
            failures,
            reps,
            rate,
            bound,
            threshold,
            pass: rate <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub beta: f64,
    /// Accuracy used by the estimator-concentration check.
    pub alpha: f64,
    pub checks: Vec<Check>,
    pub singular_fits: usize,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Accuracy `α` at which `|θ̂₁ − θ₁| ≤ α·μ^{−1/2}` is checked.
pub fn concentration_alpha(s: f64, d: usize, n: usize, beta: f64) -> f64 {
    (24.0 * (s * s).max(1.0) * (4.0 / beta).ln() / (n - d) as f64).sqrt()
}

/// Monte Carlo check of the four concentration properties of the task.
pub fn validate_assumptions(task: &RegressionTask, n: usize, beta: f64, reps: usize, stream: Stream) -> Result<ValidationReport> {
    let d = task.d();
    let min_n = 4 * d + (18.0 * (2.0 / beta).ln()).ceil() as usize;
    if n < min_n {
        return Err(Error::param("n", format!("{n} is below 4d + ⌈18·ln(2/β)⌉ = {min_n}")));
    }
    if !(beta > 0.0 && beta < 1.0) || reps == 0 {
        return Err(Error::param("beta", "need beta in (0, 1) and reps > 0"));
    }
    let s2 = task.population_loss();
    let mu = task.mu();
    let alpha = concentration_alpha(task.model.s, d, n, beta);
    let theta1 = task.model.theta[0];
    let outcomes: Vec<Option<[bool; 4]>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rs = stream.child("validate-rep", r as u64);
            let z = generate(task, n, rs);
            let sol = fit_ols(&z, d, n).ok()?;
            let i = (rs.child("leave-out", 0).key() % n as u64) as usize;
            let gap = sol.leave_one_out_gap(z.point(i).unwrap());
            Some([
                (sol.theta1() - theta1).abs() > alpha / mu.sqrt(),
                !(mu / 2.0 <= sol.c_z && sol.c_z <= 2.0 * mu),
                n as f64 * gap > 2.0 * s2 * (2.0 / beta).ln() + 1e-12,
                sol.residual_loss > 4.0 * s2 * (1.0 + (1.0 / beta).ln() / n as f64) + 1e-12,
            ])
        })
        .collect();
    let singular = outcomes.iter().filter(|o| o.is_none()).count();
    let fails = |k: usize| outcomes.iter().filter(|o| o.is_none_or(|f| f[k])).count();
    let names = ["estimator_concentration", "curvature", "leave_one_out", "loss_tail"];
    Ok(ValidationReport {
        n,
        beta,
        alpha,
        checks: names.iter().enumerate().map(|(k, nm)| Check::new(nm, fails(k), reps, beta)).collect(),
        singular_fits: singular,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Critical value at level 0.05.
    pub critical: f64,
    pub degrees_of_freedom: usize,
    pub fits: usize,
}

impl KsResult {
    pub fn pass(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Kolmogorov–Smirnov distance of `c_Z·n/μ` from `χ²_{n−d+1}`.
pub fn curvature_ks(task: &RegressionTask, n: usize, fits: usize, stream: Stream) -> Result<KsResult> {
    let d = task.d();
    if n < d + 1 || fits == 0 {
        return Err(Error::param("n", "need n > d and at least one fit"));
    }
    let mut samples: Vec<f64> = (0..fits)
        .into_par_iter()
        .map(|r| {
            let z = generate(task, n, stream.child("ks-rep", r as u64));
            fit_ols(&z, d, n).map(|s| s.c_z * n as f64 / task.mu())
        })
        .collect::<Result<_>>()?;
    samples.sort_by(f64::total_cmp);
    let dof = n - d + 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Config(e.to_string()))?;
    let m = samples.len() as f64;
    let stat = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = chi.cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: stat,
        critical: 1.358 / m.sqrt(),
        degrees_of_freedom: dof,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistic::tests::assert_monotone_on_subsets;

    fn task(d: usize, s: f64, theta: Vec<f64>) -> RegressionTask {
        RegressionTask::new(RegressionModel {
            d,
            s,
            theta,
            sigma: SigmaSpec::Identity,
        })
        .unwrap()
    }

    /// Independent route: pin the first coefficient and solve the remaining
    /// least-squares problem by SVD on the design itself.
    fn pinned_oracle(z: &Dataset, d: usize, w: f64, denom: f64) -> f64 {
        let rows: Vec<&[f64]> = z.points().collect();
        let target = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[d] - w * r[0]));
        if d == 1 {
            return target.norm_squared() / denom;
        }
        let x = DMatrix::from_fn(rows.len(), d - 1, |i, j| rows[i][j + 1]);
        let beta = x.clone().svd(true, true).solve(&target, 1e-12).unwrap();
        (target - x * beta).norm_squared() / denom
    }

    #[test]
    fn model_json_round_trip() {
        for txt in [
            r#"{"d":2,"s":1.0,"theta":[1.0,0.0],"sigma":"identity"}"#,
            r#"{"d":2,"s":1.0,"theta":[1.0,0.0],"sigma":{"diag":[1.0,2.0]}}"#,
            r#"{"d":2,"s":1.0,"theta":[1.0,0.0],"sigma":{"dense":[[2.0,0.5],[0.5,1.0]]}}"#,
        ] {
            let m: RegressionModel = serde_json::from_str(txt).unwrap();
            assert_eq!(serde_json::to_string(&m).unwrap(), txt);
            RegressionTask::new(m).unwrap();
        }
        let bad: RegressionModel =
            serde_json::from_str(r#"{"d":2,"s":1.0,"theta":[1.0,0.0],"sigma":{"dense":[[1.0,2.0],[2.0,1.0]]}}"#).unwrap();
        assert!(RegressionTask::new(bad).is_err());
    }

    #[test]
    fn mu_for_dense_sigma() {
        let t = RegressionTask::new(RegressionModel {
            d: 2,
            s: 1.0,
            theta: vec![0.0, 0.0],
            sigma: SigmaSpec::Dense(vec![vec![2.0, 0.5], vec![0.5, 1.0]]),
        })
        .unwrap();
        // (Σ⁻¹)₁₁ = Σ₂₂/det
        assert!((t.mu() - (2.0 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn noiseless_generation_and_fit() {
        let t = task(3, 0.0, vec![1.0, 0.0, 0.0]);
        let z = generate(&t, 40, Stream::new(1));
        for p in z.points() {
            assert_eq!(p[3], p[0]);
        }
        let sol = fit_ols(&z, 3, 40).unwrap();
        assert!((sol.theta_hat[0] - 1.0).abs() < 1e-8 && sol.theta_hat[1].abs() < 1e-8);
        assert!(sol.residual_loss < 1e-12);
    }

    #[test]
    fn sample_covariance_and_response_variance() {
        let t = RegressionTask::new(RegressionModel {
            d: 2,
            s: 0.5,
            theta: vec![1.0, -2.0],
            sigma: SigmaSpec::Identity,
        })
        .unwrap();
        let n = 100_000;
        let z = generate(&t, n, Stream::new(2));
        let x = DMatrix::from_fn(n, 2, |i, j| z.point(i).unwrap()[j]);
        let cov = x.transpose() * &x / n as f64;
        let op = (cov - DMatrix::identity(2, 2)).symmetric_eigenvalues().abs().max();
        assert!(op < 0.05, "operator-norm error {op}");
        let ys: Vec<f64> = z.points().map(|p| p[2]).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        let want = 1.0 + 4.0 + 0.25;
        assert!((var - want).abs() < 0.05 * want, "var {var}");
    }

    #[test]
    fn profile_identity_against_pinned_oracle() {
        for (d, seed) in [(1usize, 3u64), (2, 4), (3, 5), (5, 6)] {
            let t = task(d, 1.0, (0..d).map(|i| i as f64 * 0.3 - 0.2).collect());
            let n = 30;
            let z = generate(&t, n, Stream::new(seed));
            let sol = fit_ols(&z, d, n).unwrap();
            let quad = profile_quadratic(&z, d);
            assert!((quad.min_rss() / n as f64 - sol.residual_loss).abs() < 1e-10);
            assert!((quad.argmin() - sol.theta1()).abs() < 1e-9);
            assert!((quad.a / n as f64 - sol.c_z).abs() < 1e-10);
            let mut rng = Stream::new(seed + 99).rng();
            for _ in 0..50 {
                let w: f64 = rand::Rng::random_range(&mut rng, -3.0..3.0);
                let oracle = pinned_oracle(&z, d, w, n as f64);
                assert!(((oracle - sol.residual_loss) - sol.c_z * (w - sol.theta1()).powi(2)).abs() <= 1e-8);
                assert!((sol.profile_loss(w) - oracle).abs() <= 1e-8);
                assert!((quad.min_rss_on(w, w) / n as f64 - oracle).abs() <= 1e-8);
            }
            assert_eq!(sol.profile_loss(sol.theta1()), sol.residual_loss);
            assert!((sol.profile_loss(sol.theta1() + 1.0) - sol.profile_loss(sol.theta1() - 1.0)).abs() < 1e-12);
            assert!((sol.profile_loss(sol.theta1() + 1.0) - sol.residual_loss - sol.c_z).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_curvature() {
        let t = task(1, 1.0, vec![0.7]);
        let z = generate(&t, 25, Stream::new(7));
        let sol = fit_ols(&z, 1, 25).unwrap();
        let direct = z.points().map(|p| p[0] * p[0]).sum::<f64>() / 25.0;
        assert!((sol.c_z - direct).abs() < 1e-14);
    }

    #[test]
    fn singular_design_is_reported() {
        let z = Dataset::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 1.0], vec![3.0, 6.0, 0.0]]).unwrap();
        assert!(matches!(fit_ols(&z, 2, 3), Err(Error::SingularGram { .. })));
        // the statistic degrades gracefully on the same rows
        let l = RegressionLoss::new(2, 3).evaluate(&z).unwrap();
        let oracle = pinned_oracle(&z, 1, 0.0, 3.0);
        let direct = {
            let x = DMatrix::from_fn(3, 2, |i, j| z.point(i).unwrap()[j]);
            let y = DVector::from_fn(3, |i, _| z.point(i).unwrap()[2]);
            let b = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
            (y - x * b).norm_squared() / 3.0
        };
        assert!((l - direct).abs() < 1e-9, "{l} vs {direct} ({oracle})");
    }

    #[test]
    fn leave_one_out_matches_refit() {
        let t = task(3, 1.0, vec![0.5, 0.1, -0.4]);
        let n = 40;
        let z = generate(&t, n, Stream::new(8));
        let sol = fit_ols(&z, 3, n).unwrap();
        for i in [0, 7, 39] {
            let minus = fit_ols(&z.replace(i, None).unwrap(), 3, n).unwrap();
            let gap = sol.leave_one_out_gap(z.point(i).unwrap());
            assert!(gap >= 0.0);
            assert!((gap - (sol.residual_loss - minus.residual_loss)).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_denominator_loss_is_monotone() {
        for seed in 0..5 {
            for d in 1..=2 {
                let t = task(d, 1.0, vec![0.8; d]);
                let z = generate(&t, 8, Stream::new(seed + 10 * d as u64));
                assert_monotone_on_subsets(&RegressionLoss::new(d, 8), &z, 1e-9);
            }
        }
    }

    #[test]
    fn validators_pass_on_a_well_specified_task() {
        let t = task(3, 1.0, vec![0.35, 0.2, -0.1]);
        let rep = validate_assumptions(&t, 200, 0.1, 500, Stream::new(9)).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        let quiet = task(3, 0.0, vec![0.35, 0.2, -0.1]);
        let rep = validate_assumptions(&quiet, 200, 0.1, 100, Stream::new(9)).unwrap();
        assert_eq!(rep.checks[2].failures, 0);
        assert_eq!(rep.checks[3].failures, 0);
        assert!(validate_assumptions(&t, 20, 0.1, 10, Stream::new(0)).is_err());
    }
}
