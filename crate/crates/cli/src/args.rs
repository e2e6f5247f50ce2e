use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spice::SolverConfig;

use crate::bench::{run_bench, BenchArgs};
use crate::classify::{run_classify, ClassifyArgs, Schemes};
use crate::config::{ConfigFile, Estimator, ExperimentConfig, FitSettings, GridSpec, List, Mode, ModelName};
use crate::estimate::{run_estimate, run_tune, CvSpec, EstimateArgs, PlainEstimator, TuneArgs};
use crate::simulate::{simulate, write_outputs};
use crate::{exit_code, UsageError};

#[derive(Debug, Parser)]
#[command(name = "spice", version, about = "Sparse concentration matrix estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo comparison on the simulation models.
    Simulate(SimulateCmd),
    /// Fit one estimator to a CSV data set.
    Estimate(EstimateCmd),
    /// Select the penalty for a CSV data set.
    Tune(TuneCmd),
    /// Random-split LDA classification on a labeled CSV.
    Classify(ClassifyCmd),
    /// Time the solver across dimensions.
    Bench(BenchCmd),
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Log-spaced penalty grid `lo:hi:k`.
    #[arg(long)]
    grid: Option<GridSpec>,
    /// `corr` (fit the correlation matrix) or `cov`.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    max_inner_sweeps: Option<usize>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
}

/// Common settings after merging flags over the config file.
struct Resolved {
    file: ConfigFile,
    seed: u64,
    out: PathBuf,
    lambda: Option<f64>,
    grid: Option<GridSpec>,
    fit: FitSettings,
}

impl Common {
    fn resolve(self) -> anyhow::Result<Resolved> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            inner_tol: file.pick(self.inner_tol, "inner_tol")?.unwrap_or(defaults.inner_tol),
            outer_tol: file.pick(self.outer_tol, "outer_tol")?.unwrap_or(defaults.outer_tol),
            max_inner_sweeps: file.pick(self.max_inner_sweeps, "max_inner_sweeps")?.unwrap_or(defaults.max_inner_sweeps),
            max_outer_iters: file.pick(self.max_outer_iters, "max_outer_iters")?.unwrap_or(defaults.max_outer_iters),
            ..defaults
        };
        solver.validate().map_err(|e| UsageError(e.to_string()))?;
        let fit = FitSettings {
            q: file.pick(self.q, "q")?.unwrap_or(1.0),
            mode: file.pick(self.mode, "mode")?.map_or(FitSettings::default().mode, |m| m.0),
            solver,
        };
        fit.penalty(0.0)?;
        if let Some(threads) = file.pick(self.threads, "threads")? {
            if threads == 0 {
                return Err(UsageError("threads must be at least 1".into()).into());
            }
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
        Ok(Resolved {
            seed: file.pick(self.seed, "seed")?.unwrap_or(1),
            out: file.pick(self.out, "out")?.unwrap_or_else(|| PathBuf::from("out")),
            lambda: file.pick(self.lambda, "lambda")?,
            grid: file.pick(self.grid, "grid")?,
            fit,
            file,
        })
    }
}

#[derive(Debug, Args)]
struct SimulateCmd {
    #[command(flatten)]
    common: Common,
    /// Comma-separated: omega1 (AR1), omega2 (AR4), omega3, omega4.
    #[arg(long)]
    models: Option<List<ModelName>>,
    /// Comma-separated dimensions.
    #[arg(long)]
    p: Option<List<usize>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated: spice, lw, sample.
    #[arg(long)]
    estimators: Option<List<Estimator>>,
}

#[derive(Debug, Args)]
struct EstimateCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    /// spice, lw, sample or naive_bayes.
    #[arg(long, default_value = "spice")]
    estimator: PlainEstimator,
    /// Cross-validate the penalty instead of fixing it: `cv:<k>`.
    #[arg(long)]
    tune: Option<CvSpec>,
}

#[derive(Debug, Args)]
struct TuneCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    /// Held-out CSV for the validation likelihood.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// k-fold cross-validation: `cv:<k>`.
    #[arg(long)]
    tune: Option<CvSpec>,
    /// 0/1 label column; switches cross-validation to classification error.
    #[arg(long)]
    label_column: Option<String>,
}

#[derive(Debug, Args)]
struct ClassifyCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = 100)]
    splits: usize,
    /// Training rows per class, `n0,n1`.
    #[arg(long)]
    train_counts: Option<List<usize>>,
    /// Keep this many features by t-statistic on each training split.
    #[arg(long)]
    p_keep: Option<usize>,
    /// A, B or both.
    #[arg(long, default_value = "both")]
    scheme: Schemes,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Debug, Args)]
struct BenchCmd {
    #[command(flatten)]
    common: Common,
    /// Comma-separated dimensions.
    #[arg(long)]
    p: List<usize>,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

fn simulate_config(cmd: SimulateCmd) -> anyhow::Result<ExperimentConfig> {
    let c = cmd.common.resolve()?;
    let f = &c.file;
    let cfg = ExperimentConfig {
        models: f
            .pick(cmd.models, "models")?
            .map_or_else(|| vec![spice::simulation::ModelSpec::omega1(2).kind], |l| l.0.into_iter().map(|m| m.0).collect()),
        p_list: f.pick(cmd.p, "p")?.map_or_else(|| vec![30], |l| l.0),
        n: f.pick(cmd.n, "n")?.unwrap_or(100),
        n_val: f.pick(cmd.n_val, "n_val")?.unwrap_or(100),
        n_reps: f.pick(cmd.reps, "reps")?.unwrap_or(50),
        seed: c.seed,
        estimators: f.pick(cmd.estimators, "estimators")?.map_or_else(
            || vec![Estimator::Spice, Estimator::LedoitWolf, Estimator::Sample],
            |l| l.0,
        ),
        grid: c.grid,
        lambda: c.lambda,
        fit: c.fit,
        out: c.out,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(cmd) => {
            let cfg = simulate_config(cmd)?;
            let cells = simulate(&cfg)?;
            write_outputs(&cfg, &cells)?;
        }
        Command::Estimate(cmd) => {
            let c = cmd.common.resolve()?;
            let report = run_estimate(&EstimateArgs {
                input: cmd.input,
                estimator: cmd.estimator,
                lambda: c.lambda,
                tune: cmd.tune,
                grid: c.grid,
                fit: c.fit,
                seed: c.seed,
                out: c.out,
            })?;
            for (k, v) in report {
                println!("{k} = {v}");
            }
        }
        Command::Tune(cmd) => {
            let c = cmd.common.resolve()?;
            let r = run_tune(&TuneArgs {
                input: cmd.input,
                validation: cmd.validation,
                cv: cmd.tune,
                label_column: cmd.label_column,
                grid: c.grid,
                fit: c.fit,
                seed: c.seed,
                out: c.out,
            })?;
            println!("best_lambda = {}", r.best_lambda);
        }
        Command::Classify(cmd) => {
            let c = cmd.common.resolve()?;
            let train_counts = match cmd.train_counts {
                None => None,
                Some(List(v)) if v.len() == 2 => Some([v[0], v[1]]),
                Some(_) => return Err(UsageError("train-counts needs two values, n0,n1".into()).into()),
            };
            let outcome = run_classify(&ClassifyArgs {
                input: cmd.input,
                label_column: cmd.label_column,
                n_splits: cmd.splits,
                train_counts,
                p_keep: cmd.p_keep,
                schemes: cmd.scheme,
                folds: cmd.folds,
                grid: c.grid,
                fit: c.fit,
                seed: c.seed,
                out: c.out,
            })?;
            if !outcome.failures.is_empty() {
                log::warn!("{} splits failed", outcome.failures.len());
            }
        }
        Command::Bench(cmd) => {
            let c = cmd.common.resolve()?;
            run_bench(&BenchArgs {
                p_list: cmd.p.0,
                n: cmd.n,
                lambda: c.lambda.unwrap_or(0.1),
                repeats: cmd.repeats,
                fit: c.fit,
                seed: c.seed,
                out: c.out,
            })?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status: 0 on success, 1 on a runtime failure, 2 on a usage
/// or input error.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
