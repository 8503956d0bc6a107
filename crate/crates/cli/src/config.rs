//! JSON experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use monodp::applications::{IntervalPartition, LossTask};
use monodp::audit::HardInstanceSpec;
use monodp::regression::{generate, RegressionLoss, RegressionModel, RegressionTask, SigmaSpec};
use monodp::statistic::{Count, GramEigenvalue, NonnegativeSum};
use monodp::{Dataset, Error, MonotoneStatistic, PrivacyBudget, Range, Result, Statistic, Stream};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[default]
    Count,
    NonnegativeSum,
    Eigenvalue,
    RegressionLoss,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMechanism {
    #[default]
    PlugIn,
    Constant,
    Median,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub lo: f64,
    pub hi: f64,
    pub kappa: usize,
}

/// Every field is optional; absent fields take the defaults of the accessors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: TaskKind,
    /// Column summed by the nonnegative-sum task.
    pub column: Option<usize>,
    pub d: Option<usize>,
    pub s: Option<f64>,
    pub theta: Option<Vec<f64>>,
    #[serde(rename = "Sigma")]
    pub sigma: Option<SigmaSpec>,
    /// CSV dataset used for every run instead of generated data.
    pub data: Option<PathBuf>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub tau: Option<usize>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<usize>,
    pub rho: Option<f64>,
    pub t: Option<f64>,
    pub index: Option<usize>,
    pub partition: Option<PartitionSpec>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub query_cap: Option<u64>,
    /// Fits for the curvature KS test in validate-regression; 0 skips it.
    pub ks_fits: Option<usize>,
    pub mechanism: Option<AuditMechanism>,
    /// Output of the constant audit mechanism.
    pub constant: Option<f64>,
    pub instance: Option<HardInstanceSpec>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Copy with one field replaced by a JSON literal.
    pub fn with_value(&self, param: &str, value: &str) -> Result<Self> {
        let mut obj = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let v: serde_json::Value =
            serde_json::from_str(value).map_err(|e| Error::Config(format!("value `{value}` for `{param}`: {e}")))?;
        obj.as_object_mut().expect("config serializes to an object").insert(param.to_string(), v);
        serde_json::from_value(obj).map_err(|e| Error::Config(format!("sweep parameter `{param}`: {e}")))
    }

    pub fn d(&self) -> usize {
        self.d
            .or(self.theta.as_ref().map(Vec::len))
            .unwrap_or(1)
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(100)
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(0.1)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(1.0)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.05)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.1)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(0.1)
    }

    pub fn index(&self) -> usize {
        self.index.unwrap_or(1)
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(2.0 * self.p())
    }

    pub fn t(&self) -> f64 {
        self.t.unwrap_or(0.1)
    }

    pub fn budget(&self) -> Result<PrivacyBudget> {
        PrivacyBudget::new(self.epsilon(), self.delta())
    }

    pub fn model(&self) -> Result<RegressionTask> {
        let d = self.d();
        RegressionTask::new(RegressionModel {
            d,
            s: self.s.unwrap_or(1.0),
            theta: self.theta.clone().unwrap_or_else(|| vec![0.0; d]),
            sigma: self.sigma.clone().unwrap_or(SigmaSpec::Identity),
        })
    }

    pub fn partition(&self) -> Result<IntervalPartition> {
        let s = self.partition.unwrap_or(PartitionSpec { lo: -1.0, hi: 1.0, kappa: 20 });
        IntervalPartition::uniform(s.lo, s.hi, s.kappa)
    }
}

/// Everything a run needs that does not depend on the run index.
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub model: RegressionTask,
    pub fixed_data: Option<Dataset>,
    pub query_cap: Option<u64>,
}

impl Setup {
    pub fn new(cfg: ExperimentConfig, query_cap: Option<u64>) -> Result<Self> {
        let model = cfg.model()?;
        let fixed_data = cfg.data.as_ref().map(Dataset::load).transpose()?;
        let query_cap = query_cap.or(cfg.query_cap);
        Ok(Setup { cfg, model, fixed_data, query_cap })
    }

    pub fn n(&self) -> usize {
        self.fixed_data.as_ref().map_or(self.cfg.n(), Dataset::len)
    }

    /// Rows `(x₁, …, x_d, y)`, generated from the model or loaded.
    pub fn data(&self, stream: Stream) -> Dataset {
        match &self.fixed_data {
            Some(z) => z.clone(),
            None => generate(&self.model, self.cfg.n(), stream),
        }
    }

    /// The first `d` columns of [`Setup::data`].
    pub fn covariates(&self, stream: Stream) -> Result<Dataset> {
        let z = self.data(stream);
        let d = self.model.d().min(z.width());
        let flat: Vec<f64> = z.points().flat_map(|r| r[..d].iter().copied()).collect();
        Dataset::from_flat(d, flat)
    }

    pub fn statistic(&self) -> Result<Arc<dyn Statistic>> {
        let d = self.model.d();
        Ok(match self.cfg.task {
            TaskKind::Count => Arc::new(Count),
            TaskKind::NonnegativeSum => Arc::new(NonnegativeSum { column: self.cfg.column.unwrap_or(0) }),
            TaskKind::Eigenvalue => Arc::new(GramEigenvalue::new(d, self.cfg.index())?),
            TaskKind::RegressionLoss => Arc::new(RegressionLoss::new(d, self.n())),
        })
    }

    /// The statistic on a finite grid, as the median mechanism requires.
    /// Count uses `{0, …, n}`; other tasks need `kappa` and use
    /// `{0, α, …, κα}` with values floored and clamped onto it.
    pub fn gridded_statistic(&self) -> Result<MonotoneStatistic> {
        let inner = self.statistic()?;
        let f = match (self.cfg.task, self.cfg.kappa) {
            (TaskKind::Count, None) => MonotoneStatistic::from_arc(inner).with_range(Range::integers(self.n())),
            (_, Some(kappa)) => {
                let step = self.cfg.alpha();
                MonotoneStatistic::new(Discretized { inner, step, kappa }).with_range(Range::Grid {
                    start: 0.0,
                    step,
                    size: kappa + 1,
                })
            }
            (_, None) => {
                return Err(Error::Contract(
                    "the median mechanism needs a finite range: set `kappa` (grid {0, alpha, ..., kappa*alpha})".into(),
                ))
            }
        };
        Ok(f.with_query_cap(self.query_cap))
    }

    pub fn monotone(&self) -> Result<MonotoneStatistic> {
        Ok(MonotoneStatistic::from_arc(self.statistic()?).with_query_cap(self.query_cap))
    }

    pub fn loss_task(&self) -> Result<LossTask> {
        Ok(LossTask {
            oracle: Arc::new(RegressionLoss::new(self.model.d(), self.n())),
            rho: self.cfg.rho(),
            p: self.cfg.p(),
            alpha: self.cfg.alpha(),
            budget: self.cfg.budget()?,
            beta: self.cfg.beta(),
            query_cap: self.query_cap,
        })
    }
}

/// `min(κ, ⌊f/step⌋₊)·step`; monotone whenever `f` is.
struct Discretized {
    inner: Arc<dyn Statistic>,
    step: f64,
    kappa: usize,
}

impl Statistic for Discretized {
    fn evaluate(&self, s: &Dataset) -> Result<f64> {
        let k = (self.inner.evaluate(s)? / self.step).floor().clamp(0.0, self.kappa as f64);
        Ok(k * self.step)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
