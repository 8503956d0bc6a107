//! Per-run experiment bodies.

use std::time::Instant;

use clap::ValueEnum;
use monodp::applications::{estimate_eigenvalue, estimate_loss, estimate_theta1, test_loss, test_parameter, EigenTask};
use monodp::mechanisms::{
    average_of_quantiles, average_tau, median_of_quantiles, quantile_finder, ssa_blocks, ssa_stable_histogram, SsaConfig,
};
use monodp::{Error, QuantileFinderConfig, Release, Result, Stream};

use crate::config::Setup;
use crate::output::{Row, RowParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RunCommand {
    Quantiles,
    Median,
    Average,
    Ssa,
    Eig,
    LossEst,
    LossTest,
    ParamTest,
    Theta1,
}

impl RunCommand {
    /// Command-specific columns after the base columns.
    pub fn extra_columns(self) -> &'static [&'static str] {
        match self {
            RunCommand::Quantiles => &["tau", "sample_min", "sample_max", "q"],
            RunCommand::Median => &["tau", "sample_min", "sample_max"],
            RunCommand::Average => &["tau", "t_star", "core_average"],
            RunCommand::Ssa => &["blocks"],
            RunCommand::Eig => &["lambda_true"],
            RunCommand::LossEst | RunCommand::LossTest => &["loss_true"],
            RunCommand::ParamTest => &["theta1_true", "arms"],
            RunCommand::Theta1 => &["theta1_true", "interval_lo", "interval_hi", "candidate_calls"],
        }
    }
}

pub fn row_params(setup: &Setup) -> RowParams {
    let c = &setup.cfg;
    RowParams {
        n: setup.n(),
        p: c.p(),
        epsilon: c.epsilon(),
        delta: c.delta(),
        alpha: c.alpha(),
        beta: c.beta(),
    }
}

/// Seed of run `i`; `Stream::new(seed)` replays the run on its own.
pub fn run_seed(seed: u64, i: usize) -> u64 {
    Stream::new(seed).child("run", i as u64).key()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn fmt_release(r: &Release) -> String {
    fmt_opt(r.value())
}

/// Statistic evaluations made by one average-of-quantiles call.
fn average_queries(p: f64, eps: f64, delta: f64) -> Result<u64> {
    let (e, d) = (eps / 2.0, delta / 3.0);
    QuantileFinderConfig::new(p, average_tau(e, d)?, d)?.m()
}

struct Outcome {
    output: Option<f64>,
    queries: u64,
    extra: Vec<String>,
}

pub fn run_once(cmd: RunCommand, setup: &Setup, run_id: usize, seed: u64) -> Result<Row> {
    let start = Instant::now();
    let o = outcome(cmd, setup, Stream::new(seed))?;
    Ok(Row {
        run_id,
        seed,
        output: o.output,
        queries: o.queries,
        extra: o.extra,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn outcome(cmd: RunCommand, setup: &Setup, run: Stream) -> Result<Outcome> {
    let cfg = &setup.cfg;
    let data = run.child("data", 0);
    let mech = run.child("mechanism", 0);
    let (p, beta, alpha) = (cfg.p(), cfg.beta(), cfg.alpha());
    let theta1_true = || setup.model.model.theta[0].to_string();
    Ok(match cmd {
        RunCommand::Quantiles => {
            let f = setup.monotone()?;
            let tau = cfg.tau.unwrap_or(20);
            let qc = match cfg.gamma {
                Some(g) => QuantileFinderConfig::with_gamma(p, tau, cfg.delta(), g)?,
                None => QuantileFinderConfig::new(p, tau, cfg.delta())?,
            };
            let list = quantile_finder(&f, &setup.data(data), &qc, mech)?;
            let q: Vec<String> = list.q.iter().map(f64::to_string).collect();
            Outcome {
                output: Some(list.q[(tau - 1) / 2]),
                queries: list.m,
                extra: vec![tau.to_string(), list.sample_min.to_string(), list.sample_max.to_string(), q.join(";")],
            }
        }
        RunCommand::Median => {
            let f = setup.gridded_statistic()?;
            let out = median_of_quantiles(&f, &setup.data(data), &cfg.budget()?, beta, p, mech)?;
            Outcome {
                output: out.value.value(),
                queries: out.queries_used,
                extra: vec![out.tau.to_string(), out.sample_min.to_string(), out.sample_max.to_string()],
            }
        }
        RunCommand::Average => {
            let f = setup.monotone()?;
            let out = average_of_quantiles(&f, &setup.data(data), &cfg.budget()?, alpha, p, mech)?;
            Outcome {
                output: out.value.value(),
                queries: out.queries_used,
                extra: vec![
                    out.tau.to_string(),
                    out.t_star.map_or_else(String::new, |t| t.to_string()),
                    fmt_opt(out.core_average),
                ],
            }
        }
        RunCommand::Ssa => {
            let f = setup.statistic()?;
            let budget = cfg.budget()?;
            let sc = SsaConfig::new(alpha, beta);
            let out = ssa_stable_histogram(&*f, &setup.data(data), &budget, &sc, &mut mech.rng())?;
            Outcome {
                output: out.value.value(),
                queries: out.queries_used,
                extra: vec![ssa_blocks(&budget, &sc)?.to_string()],
            }
        }
        RunCommand::Eig => {
            let index = cfg.index();
            let mut lambdas: Vec<f64> = setup.model.sigma().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            lambdas.sort_by(|a, b| b.total_cmp(a));
            let truth = lambdas.get(index.wrapping_sub(1)).map_or_else(String::new, f64::to_string);
            let task = EigenTask {
                index,
                alpha,
                p,
                budget: cfg.budget()?,
                beta,
                query_cap: setup.query_cap,
            };
            match estimate_eigenvalue(&setup.covariates(data)?, &task, mech) {
                Ok(e) => Outcome {
                    output: Some(e.value),
                    queries: e.output.queries_used,
                    extra: vec![truth],
                },
                Err(Error::NoStableCore) => Outcome {
                    output: None,
                    queries: average_queries(p, cfg.epsilon(), cfg.delta())?,
                    extra: vec![truth],
                },
                Err(e) => return Err(e),
            }
        }
        RunCommand::LossEst => {
            let out = estimate_loss(&setup.data(data), &setup.loss_task()?, mech)?;
            Outcome {
                output: out.value.value(),
                queries: out.queries_used,
                extra: vec![setup.model.population_loss().to_string()],
            }
        }
        RunCommand::LossTest => {
            let (reject, out) = test_loss(&setup.data(data), &setup.loss_task()?, mech)?;
            Outcome {
                output: Some(f64::from(u8::from(reject))),
                queries: out.queries_used,
                extra: vec![setup.model.population_loss().to_string()],
            }
        }
        RunCommand::ParamTest => match test_parameter(&setup.data(data), &setup.loss_task()?, cfg.t(), mech) {
            Ok(t) => Outcome {
                output: Some(f64::from(t.decision)),
                queries: t.queries_used,
                extra: vec![theta1_true(), t.arms.iter().map(fmt_release).collect::<Vec<_>>().join(";")],
            },
            Err(Error::NoStableArm) => Outcome {
                output: None,
                queries: 3 * average_queries(p, cfg.epsilon() / 3.0, cfg.delta() / 6.0)?,
                extra: vec![theta1_true(), "bottom;bottom;bottom".into()],
            },
            Err(e) => return Err(e),
        },
        RunCommand::Theta1 => {
            let est = estimate_theta1(&setup.data(data), &setup.loss_task()?, &cfg.partition()?, mech)?;
            Outcome {
                output: Some(est.index as f64),
                queries: est.queries_used,
                extra: vec![
                    theta1_true(),
                    est.interval.lo.to_string(),
                    est.interval.hi.to_string(),
                    est.candidate_calls.to_string(),
                ],
            }
        }
    })
}
