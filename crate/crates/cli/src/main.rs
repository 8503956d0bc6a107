//! `mono-dp`: runs mechanisms, applications and audits from JSON configs and
//! writes one CSV row per run.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use monodp::audit::{audit_group_privacy, constant_mechanism, make_hard_instance, median_mechanism, plug_in_mechanism};
use monodp::regression::{curvature_ks, validate_assumptions};
use monodp::{Error, Stream};
use rayon::prelude::*;

use commands::{row_params, run_once, run_seed, RunCommand};
use config::{AuditMechanism, ExperimentConfig, Setup};
use output::{Row, RunWriter};

#[derive(Parser)]
#[command(name = "mono-dp", version, about = "Private evaluation of monotone statistics: experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON experiment config; absent fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, env = "MONODP_THREADS")]
    threads: Option<usize>,
    /// Cap on statistic evaluations per mechanism call.
    #[arg(long)]
    query_cap: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Private quantile list of the statistic.
    Quantiles(Common),
    /// Median of quantiles.
    Median(Common),
    /// Average of quantiles.
    Average(Common),
    /// Subsample-and-aggregate baseline.
    Ssa(Common),
    /// Eigenvalue of the covariate second-moment matrix.
    Eig(Common),
    /// Regression loss estimate.
    LossEst(Common),
    /// Regression loss test; output 1 rejects.
    LossTest(Common),
    /// Sign test on the first coefficient; output is -1, 0 or 1.
    ParamTest(Common),
    /// Interval holding the first coefficient; output is its index.
    Theta1(Common),
    /// Group-privacy audit on a hard instance; writes a JSON report.
    Audit(Common),
    /// Repeat a run command over values of one config field.
    Sweep(SweepArgs),
    /// Monte Carlo check of the regression concentration properties.
    ValidateRegression(Common),
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Config field to vary.
    #[arg(long)]
    param: String,
    /// JSON literals, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[arg(long, value_enum, default_value = "median")]
    inner: RunCommand,
}

/// A failure with its exit code: 2 for configuration, 3 at run time.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Parameter { .. } | Error::Config(_) | Error::Contract(_) => 2,
            _ => 3,
        };
        Failure { code, error }
    }
}

fn config_failure(error: Error) -> Failure {
    Failure { code: 2, error }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(config_failure),
        None => Ok(ExperimentConfig::default()),
    }
}

fn seed_of(common: &Common, cfg: &ExperimentConfig) -> u64 {
    common.seed.or(cfg.seed).unwrap_or(0)
}

fn reps_of(common: &Common, cfg: &ExperimentConfig, default: usize) -> usize {
    common.reps.or(cfg.reps).unwrap_or(default)
}

/// Writes rows in run order up to the first failure, then a status row.
fn write_rows(w: &mut RunWriter, rows: Vec<Result<Row, Error>>, setup: &Setup) -> Result<(), Failure> {
    let params = row_params(setup);
    for r in rows {
        match r {
            Ok(row) => w.write_row(&row, &params)?,
            Err(e) => {
                w.write_status(&e)?;
                return Err(e.into());
            }
        }
    }
    Ok(())
}

fn finish(w: RunWriter, result: Result<(), Failure>) -> Result<(), Failure> {
    let flushed = w.finish();
    result?;
    Ok(flushed?)
}

fn run_command(cmd: RunCommand, common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let seed = seed_of(common, &cfg);
    let reps = reps_of(common, &cfg, 100);
    let setup = Setup::new(cfg, common.query_cap)?;
    let mut w = RunWriter::create(common.out.as_deref(), &RunWriter::header(cmd.extra_columns()))?;
    let rows: Vec<_> = (0..reps)
        .into_par_iter()
        .map(|i| run_once(cmd, &setup, i, run_seed(seed, i)))
        .collect();
    let result = write_rows(&mut w, rows, &setup);
    finish(w, result)
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let common = &args.common;
    let base = load(common)?;
    let seed = seed_of(common, &base);
    let reps = reps_of(common, &base, 100);
    let mut extra = vec!["param", "value"];
    extra.extend(args.inner.extra_columns());
    let mut w = RunWriter::create(common.out.as_deref(), &RunWriter::header(&extra))?;
    let mut result = Ok(());
    for (k, value) in args.values.iter().enumerate() {
        let setup = match base.with_value(&args.param, value).and_then(|c| Setup::new(c, common.query_cap)) {
            Ok(s) => s,
            Err(e) => {
                w.write_status(&e)?;
                result = Err(config_failure(e));
                break;
            }
        };
        // the same run seeds at every value, so runs are paired across the sweep
        let rows: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|i| {
                run_once(args.inner, &setup, k * reps + i, run_seed(seed, i)).map(|mut r| {
                    r.extra.splice(0..0, [args.param.clone(), value.clone()]);
                    r
                })
            })
            .collect();
        result = write_rows(&mut w, rows, &setup);
        if result.is_err() {
            break;
        }
    }
    finish(w, result)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::from(Error::Io(e.to_string()));
    match out {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn audit(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let seed = seed_of(common, &cfg);
    let runs = reps_of(common, &cfg, 1000);
    let spec = cfg
        .instance
        .ok_or_else(|| config_failure(Error::Config("audit needs an `instance` block".into())))?;
    let inst = make_hard_instance(spec)?;
    let (eps, delta) = (cfg.epsilon(), cfg.delta());
    let stream = Stream::new(seed).child("audit", 0);
    let report = match cfg.mechanism.unwrap_or_default() {
        AuditMechanism::PlugIn => audit_group_privacy(plug_in_mechanism(&inst), &inst, runs, eps, delta, stream)?,
        AuditMechanism::Constant => {
            let v = cfg.constant.unwrap_or(0.0);
            audit_group_privacy(constant_mechanism(v), &inst, runs, eps, delta, stream)?
        }
        AuditMechanism::Median => {
            let cap = common.query_cap.or(cfg.query_cap);
            let mech = median_mechanism(&inst, cfg.budget()?, cfg.beta(), cfg.p(), cap);
            audit_group_privacy(mech, &inst, runs, eps, delta, stream)?
        }
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::from(Error::Io(e.to_string())))?;
    text.push('\n');
    write_text(common.out.as_deref(), &text)
}

fn validate_regression(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let seed = seed_of(common, &cfg);
    let reps = reps_of(common, &cfg, 500);
    let task = cfg.model()?;
    let (n, beta) = (cfg.n(), cfg.beta());
    let header = ["check", "seed", "n", "beta", "failures", "reps", "rate", "bound", "threshold", "pass"];
    let mut w = RunWriter::create(common.out.as_deref(), &header.map(String::from))?;
    let stream = Stream::new(seed);
    let result = (|| -> Result<(), Failure> {
        let report = validate_assumptions(&task, n, beta, reps, stream.child("validate", 0))?;
        for c in &report.checks {
            w.write_raw([
                c.name.clone(),
                seed.to_string(),
                n.to_string(),
                beta.to_string(),
                c.failures.to_string(),
                c.reps.to_string(),
                c.rate.to_string(),
                c.bound.to_string(),
                c.threshold.to_string(),
                u8::from(c.pass).to_string(),
            ])?;
        }
        let fits = cfg.ks_fits.unwrap_or(2000);
        if fits > 0 {
            let ks = curvature_ks(&task, n, fits, stream.child("ks", 0))?;
            w.write_raw([
                "curvature_ks".to_string(),
                seed.to_string(),
                n.to_string(),
                beta.to_string(),
                String::new(),
                ks.fits.to_string(),
                ks.statistic.to_string(),
                "0.05".to_string(),
                ks.critical.to_string(),
                u8::from(ks.pass()).to_string(),
            ])?;
        }
        Ok(())
    })();
    if let Err(f) = &result {
        w.write_status(&f.error)?;
    }
    finish(w, result)
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    match threads {
        Some(0) => Err(config_failure(Error::Config("--threads must be positive".into()))),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| config_failure(Error::Config(e.to_string()))),
        None => Ok(()),
    }
}

fn dispatch(cmd: &Cmd) -> Result<(), Failure> {
    let common = match cmd {
        Cmd::Sweep(a) => &a.common,
        Cmd::Quantiles(c)
        | Cmd::Median(c)
        | Cmd::Average(c)
        | Cmd::Ssa(c)
        | Cmd::Eig(c)
        | Cmd::LossEst(c)
        | Cmd::LossTest(c)
        | Cmd::ParamTest(c)
        | Cmd::Theta1(c)
        | Cmd::Audit(c)
        | Cmd::ValidateRegression(c) => c,
    };
    init_threads(common.threads)?;
    match cmd {
        Cmd::Quantiles(c) => run_command(RunCommand::Quantiles, c),
        Cmd::Median(c) => run_command(RunCommand::Median, c),
        Cmd::Average(c) => run_command(RunCommand::Average, c),
        Cmd::Ssa(c) => run_command(RunCommand::Ssa, c),
        Cmd::Eig(c) => run_command(RunCommand::Eig, c),
        Cmd::LossEst(c) => run_command(RunCommand::LossEst, c),
        Cmd::LossTest(c) => run_command(RunCommand::LossTest, c),
        Cmd::ParamTest(c) => run_command(RunCommand::ParamTest, c),
        Cmd::Theta1(c) => run_command(RunCommand::Theta1, c),
        Cmd::Audit(c) => audit(c),
        Cmd::Sweep(a) => sweep(a),
        Cmd::ValidateRegression(c) => validate_regression(c),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mono-dp: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
