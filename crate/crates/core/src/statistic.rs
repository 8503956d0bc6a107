//! Black-box statistics and the monotone-statistic wrapper.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A real-valued function of a dataset.
pub trait Statistic: Send + Sync {
    fn evaluate(&self, s: &Dataset) -> Result<f64>;

    fn name(&self) -> &str {
        "statistic"
    }
}

impl<F> Statistic for F
where
    F: Fn(&Dataset) -> Result<f64> + Send + Sync,
{
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        self(s)
    }

    fn name(&self) -> &str {
        "closure"
    }
}

/// Declared output range of a statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Range {
    Unbounded,
    /// Values `start + k·step` for `k = 0..size`.
    Grid { start: f64, step: f64, size: usize },
}

impl Range {
    /// The integer grid `{0, 1, ..., kappa}`.
    pub fn integers(kappa: usize) -> Range {
        Range::Grid {
            start: 0.0,
            step: 1.0,
            size: kappa + 1,
        }
    }

    pub fn grid_size(&self) -> Option<usize> {
        match *self {
            Range::Grid { size, .. } => Some(size),
            Range::Unbounded => None,
        }
    }
}

/// Finite grid `start + k·step`, `k < size`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub size: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, size: usize) -> Result<Grid> {
        if size == 0 {
            return Err(Error::param("size", "grid must be nonempty"));
        }
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() {
            return Err(Error::param("step", format!("invalid grid step {step} or start {start}")));
        }
        Ok(Grid { start, step, size })
    }

    pub fn value(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    /// Largest grid point not above `x`, clamped to the grid.
    pub fn floor(&self, x: f64) -> f64 {
        self.value(self.floor_index(x))
    }

    pub fn floor_index(&self, x: f64) -> usize {
        if x.is_nan() || x < self.start {
            return 0;
        }
        let mut k = ((x - self.start) / self.step).floor().min((self.size - 1) as f64) as usize;
        // repair rounding in the division
        while k > 0 && self.value(k) > x {
            k -= 1;
        }
        while k + 1 < self.size && self.value(k + 1) <= x {
            k += 1;
        }
        k
    }

    /// Number of grid points strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let (mut lo, mut hi) = (0usize, self.size);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.value(mid) < x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Number of grid points at or below `x`.
    pub fn count_not_above(&self, x: f64) -> usize {
        let (mut lo, mut hi) = (0usize, self.size);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.value(mid) <= x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Index of `x` if it is (numerically) on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = self.floor_index(x);
        (self.value(k) == x).then_some(k)
    }
}

impl TryFrom<Range> for Grid {
    type Error = Error;

    fn try_from(r: Range) -> Result<Grid> {
        match r {
            Range::Grid { start, step, size } => Grid::new(start, step, size),
            Range::Unbounded => Err(Error::Contract(
                "statistic has an unbounded range; use average_of_quantiles".into(),
            )),
        }
    }
}

/// A statistic declared monotone (`f(S) ≤ f(Z)` for `S ⊆ Z`), with query
/// accounting. Clones share the query counter.
#[derive(Clone)]
pub struct MonotoneStatistic {
    inner: Arc<dyn Statistic>,
    range: Range,
    queries: Arc<AtomicU64>,
    query_cap: Option<u64>,
}

impl fmt::Debug for MonotoneStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneStatistic")
            .field("name", &self.inner.name())
            .field("range", &self.range)
            .field("queries", &self.query_count())
            .field("query_cap", &self.query_cap)
            .finish()
    }
}

impl MonotoneStatistic {
    pub fn new(inner: impl Statistic + 'static) -> Self {
        Self::from_arc(Arc::new(inner))
    }

    pub fn from_arc(inner: Arc<dyn Statistic>) -> Self {
        MonotoneStatistic {
            inner,
            range: Range::Unbounded,
            queries: Arc::new(AtomicU64::new(0)),
            query_cap: None,
        }
    }

    pub fn with_range(mut self, range: Range) -> Self {
        self.range = range;
        self
    }

    pub fn with_query_cap(mut self, cap: Option<u64>) -> Self {
        self.query_cap = cap;
        self
    }

    pub fn range(&self) -> Range {
        self.range
    }

    pub fn query_cap(&self) -> Option<u64> {
        self.query_cap
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn name(&self) -> &str {
        self.inner.name()
    }

    pub fn inner(&self) -> &Arc<dyn Statistic> {
        &self.inner
    }

    /// Fail fast if `count` more evaluations would exceed the cap.
    pub fn check_budget(&self, count: u64) -> Result<()> {
        check_cap(self.query_count(), count, self.query_cap)
    }

    pub fn evaluate(&self, s: &Dataset) -> Result<f64> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(s)
    }

    /// Record `count` evaluations made through [`MonotoneStatistic::inner`].
    pub fn record_queries(&self, count: u64) {
        self.queries.fetch_add(count, Ordering::Relaxed);
    }
}

pub(crate) fn check_cap(used: u64, count: u64, cap: Option<u64>) -> Result<()> {
    match cap {
        Some(cap) if used.saturating_add(count) > cap => Err(Error::QueryCapExceeded {
            required: used.saturating_add(count),
            cap,
        }),
        _ => Ok(()),
    }
}

/// Several statistics evaluated on the same subsample. Implementations may
/// share work across members (e.g. one regression fit for many intervals).
pub trait StatisticFamily: Send + Sync {
    fn size(&self) -> usize;

    /// Write member values into `out` (length `size()`).
    fn evaluate_into(&self, s: &Dataset, out: &mut [f64]) -> Result<()>;

    /// Reserve `draws` evaluations of every member against any query caps.
    fn check_budget(&self, _draws: u64) -> Result<()> {
        Ok(())
    }

    /// Record `draws` evaluations of every member.
    fn record_queries(&self, _draws: u64) {}
}

/// Family made of independent monotone statistics.
#[derive(Clone, Debug)]
pub struct Family(pub Vec<MonotoneStatistic>);

impl StatisticFamily for Family {
    fn size(&self) -> usize {
        self.0.len()
    }

    fn evaluate_into(&self, s: &Dataset, out: &mut [f64]) -> Result<()> {
        for (f, o) in self.0.iter().zip(out) {
            *o = f.inner.evaluate(s)?;
        }
        Ok(())
    }

    fn check_budget(&self, draws: u64) -> Result<()> {
        self.0.iter().try_for_each(|f| f.check_budget(draws))
    }

    fn record_queries(&self, draws: u64) {
        for f in &self.0 {
            f.record_queries(draws);
        }
    }
}

/// `|S|`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Count;

impl Statistic for Count {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        Ok(s.count() as f64)
    }

    fn name(&self) -> &str {
        "count"
    }
}

/// Sum of one coordinate, with negative entries clamped to zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NonnegativeSum {
    pub column: usize,
}

impl Statistic for NonnegativeSum {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        Ok(s.points().map(|z| z[self.column].max(0.0)).sum())
    }

    fn name(&self) -> &str {
        "nonnegative_sum"
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl Statistic for Constant {
    fn evaluate(&self, _s: &Dataset) -> Result<f64> {
        Ok(self.0)
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// `scale · λ_i(Σ_{z ∈ S} x xᵀ)` where `x = z[first..first + dim]` and `λ_1`
/// is the largest eigenvalue; optionally on a log scale.
#[derive(Clone, Copy, Debug)]
pub struct GramEigenvalue {
    pub first: usize,
    pub dim: usize,
    /// 1-based, descending.
    pub index: usize,
    pub scale: f64,
    pub log: bool,
}

impl GramEigenvalue {
    pub fn new(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 || index == 0 || index > dim {
            return Err(Error::param("index", format!("eigenvalue {index} of a {dim}x{dim} matrix")));
        }
        Ok(GramEigenvalue {
            first: 0,
            dim,
            index,
            scale: 1.0,
            log: false,
        })
    }

    pub fn columns_from(mut self, first: usize) -> Self {
        self.first = first;
        self
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn log_scale(mut self) -> Self {
        self.log = true;
        self
    }
}

/// Descending eigenvalues of a symmetric 2×2 matrix.
fn eig2(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let hi = mean + r;
    // the product form avoids cancellation in the small eigenvalue
    let det = a * c - b * b;
    let lo = if hi > 0.0 { det / hi } else { mean - r };
    [hi, lo]
}

impl Statistic for GramEigenvalue {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        let (d, f) = (self.dim, self.first);
        let lambda = if d == 1 {
            s.points().map(|z| z[f] * z[f]).sum::<f64>()
        } else if d == 2 {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for z in s.points() {
                let (x, y) = (z[f], z[f + 1]);
                a += x * x;
                b += x * y;
                c += y * y;
            }
            eig2(a, b, c)[self.index - 1]
        } else {
            let mut g = DMatrix::<f64>::zeros(d, d);
            for z in s.points() {
                let x = &z[f..f + d];
                for i in 0..d {
                    for j in 0..=i {
                        g[(i, j)] += x[i] * x[j];
                    }
                }
            }
            for i in 0..d {
                for j in 0..i {
                    g[(j, i)] = g[(i, j)];
                }
            }
            let mut ev: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_unstable_by(|x, y| y.total_cmp(x));
            ev[self.index - 1]
        };
        let lambda = lambda.max(0.0) * self.scale;
        Ok(if self.log { lambda.ln() } else { lambda })
    }

    fn name(&self) -> &str {
        "gram_eigenvalue"
    }
}
