//! Monte Carlo comparison of estimators on the simulation models.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use spice::estimators::{ledoit_wolf, sample_covariance};
use spice::evaluation::{kl_loss, sparsity_confusion, summarize, zero_pattern_counts};
use spice::linalg::{frobenius_distance, inverse_pd};
use spice::rng::derive_seed;
use spice::simulation::{build_model, sample_mvn, GroundTruth, ModelKind, ModelSpec};
use spice::tuning::{select_lambda_validation, LambdaGrid, SpiceFitter};
use spice::{BoolMask, SpiceError};

use crate::config::{Estimator, ExperimentConfig};
use crate::io::{fmt_opt, write_counts, write_rows};

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub rep: usize,
    /// KL loss per estimator; `None` where the estimate does not exist.
    pub kl: BTreeMap<Estimator, Option<f64>>,
    pub spice: Option<SpiceRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiceRecord {
    pub lambda: f64,
    pub frobenius_error: f64,
    pub tp_pct: Option<f64>,
    pub tn_pct: Option<f64>,
    pub zero_pattern: BoolMask,
    pub worst_ascent: f64,
    pub converged: bool,
}

/// All replications for one (model, p) cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub model: String,
    pub p: usize,
    pub truth: GroundTruth,
    pub reps: Vec<Replication>,
    /// `(replication, estimator, error)` for every failed fit.
    pub failures: Vec<(usize, Estimator, SpiceError)>,
}

impl Cell {
    pub fn values(&self, est: Estimator) -> Vec<f64> {
        self.reps.iter().filter_map(|r| r.kl.get(&est).copied().flatten()).collect()
    }

    pub fn spice_records(&self) -> impl Iterator<Item = &SpiceRecord> {
        self.reps.iter().filter_map(|r| r.spice.as_ref())
    }
}

fn model_spec(kind: ModelKind, p: usize, seed: u64) -> ModelSpec {
    ModelSpec { kind, p, seed }
}

fn run_replication(
    cfg: &ExperimentConfig,
    truth: &GroundTruth,
    rep_seed: u64,
    rep: usize,
) -> (Replication, Vec<(usize, Estimator, SpiceError)>) {
    let p = truth.sigma0.dim();
    let mut kl = BTreeMap::new();
    let mut failures = Vec::new();
    let mut spice = None;
    let sampled = sample_mvn(truth, cfg.n, derive_seed(rep_seed, 0))
        .and_then(|xt| Ok((sample_mvn(truth, cfg.n_val, derive_seed(rep_seed, 1))?, xt)));
    let (xv, xt) = match sampled {
        Ok(v) => v,
        Err(e) => {
            for &est in &cfg.estimators {
                failures.push((rep, est, e.clone()));
            }
            return (Replication { rep, kl, spice }, failures);
        }
    };
    for &est in &cfg.estimators {
        let result: Result<Option<f64>, SpiceError> = match est {
            // singular when p >= n
            Estimator::Sample if p >= cfg.n => Ok(None),
            Estimator::Sample => sample_covariance(&xt)
                .and_then(|s| inverse_pd(&s))
                .and_then(|o| kl_loss(&truth.sigma0, &o))
                .map(Some),
            Estimator::LedoitWolf => ledoit_wolf(&xt)
                .and_then(|s| inverse_pd(&s))
                .and_then(|o| kl_loss(&truth.sigma0, &o))
                .map(Some),
            Estimator::Spice => fit_spice(cfg, truth, &xt, &xv).map(|(k, rec)| {
                spice = Some(rec);
                Some(k)
            }),
        };
        match result {
            Ok(v) => {
                kl.insert(est, v);
            }
            Err(e) => {
                warn!("replication {rep}: {} failed: {e}", est.name());
                failures.push((rep, est, e));
            }
        }
    }
    (Replication { rep, kl, spice }, failures)
}

fn fit_spice(
    cfg: &ExperimentConfig,
    truth: &GroundTruth,
    xt: &spice::DataMatrix,
    xv: &spice::DataMatrix,
) -> Result<(f64, SpiceRecord), SpiceError> {
    let pen = cfg.fit.penalty(0.0).map_err(|e| SpiceError::InvalidParameter(e.0))?;
    let fitter = SpiceFitter::new(cfg.fit.mode, pen, cfg.fit.solver);
    let s = sample_covariance(xt)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let grid = match cfg.grid {
                Some(g) => g.build().map_err(|e| SpiceError::InvalidParameter(e.0))?,
                None => LambdaGrid::default_for(&s)?,
            };
            select_lambda_validation(xt, xv, &grid, &fitter)?.best_lambda
        }
    };
    let r = fitter.fit(&s, lambda)?;
    let conf = sparsity_confusion(&truth.support, &r.support())?;
    let record = SpiceRecord {
        lambda,
        frobenius_error: frobenius_distance(&r.omega_hat, &truth.omega0)?,
        tp_pct: conf.tp_pct,
        tn_pct: conf.tn_pct,
        zero_pattern: r.zero_pattern.clone(),
        worst_ascent: r.worst_ascent(),
        converged: r.converged,
    };
    Ok((kl_loss(&truth.sigma0, &r.omega_hat)?, record))
}

/// Runs every (model, p) cell. Results do not depend on thread count.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<Cell>, SpiceError> {
    let mut cells = Vec::new();
    for (m, &kind) in cfg.models.iter().enumerate() {
        for &p in &cfg.p_list {
            let cell_seed = derive_seed(cfg.seed, (m as u64) << 32 | p as u64);
            let spec = model_spec(kind, p, derive_seed(cell_seed, u64::MAX));
            let truth = build_model(&spec)?;
            let model = spec.name();
            info!("{model} p={p}: {} replications", cfg.n_reps);
            let results: Vec<_> = (0..cfg.n_reps)
                .into_par_iter()
                .map(|rep| run_replication(cfg, &truth, derive_seed(cell_seed, rep as u64), rep))
                .collect();
            let mut reps = Vec::new();
            let mut failures = Vec::new();
            for (r, f) in results {
                reps.push(r);
                failures.extend(f);
            }
            if !failures.is_empty() {
                warn!("{model} p={p}: {} failed fits", failures.len());
            }
            cells.push(Cell {
                model,
                p,
                truth,
                reps,
                failures,
            });
        }
    }
    Ok(cells)
}

fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match values.len() {
        0 => (None, None),
        1 => (Some(values[0]), None),
        _ => {
            let s = summarize(values).expect("at least two values");
            (Some(s.mean), Some(s.se))
        }
    }
}

/// Writes `kl_summary.csv`, `sparsity_summary.csv` and one
/// `zero_counts_<model>_<p>.csv` per cell into `cfg.out`.
pub fn write_outputs(cfg: &ExperimentConfig, cells: &[Cell]) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut kl_rows = Vec::new();
    let mut sparsity_rows = Vec::new();
    for c in cells {
        for &est in &cfg.estimators {
            let v = c.values(est);
            let (mean, se) = mean_se(&v);
            kl_rows.push(vec![
                c.model.clone(),
                c.p.to_string(),
                est.name().to_string(),
                fmt_opt(mean),
                fmt_opt(se),
                v.len().to_string(),
            ]);
        }
        if cfg.estimators.contains(&Estimator::Spice) {
            let tp: Vec<f64> = c.spice_records().filter_map(|r| r.tp_pct).collect();
            let tn: Vec<f64> = c.spice_records().filter_map(|r| r.tn_pct).collect();
            let (tp_mean, tp_se) = mean_se(&tp);
            let (tn_mean, tn_se) = mean_se(&tn);
            sparsity_rows.push(vec![
                c.model.clone(),
                c.p.to_string(),
                fmt_opt(tp_mean),
                fmt_opt(tp_se),
                fmt_opt(tn_mean),
                fmt_opt(tn_se),
            ]);
            let masks: Vec<BoolMask> = c.spice_records().map(|r| r.zero_pattern.clone()).collect();
            let counts = zero_pattern_counts(&masks)?;
            let counts = if counts.is_empty() { vec![vec![0; c.p]; c.p] } else { counts };
            write_counts(&cfg.out.join(format!("zero_counts_{}_{}.csv", c.model, c.p)), &counts)?;
        }
    }
    write_rows(
        &cfg.out.join("kl_summary.csv"),
        &["model", "p", "estimator", "mean", "se", "n_reps"],
        &kl_rows,
    )?;
    if cfg.estimators.contains(&Estimator::Spice) {
        write_rows(
            &cfg.out.join("sparsity_summary.csv"),
            &["model", "p", "tp_mean", "tp_se", "tn_mean", "tn_se"],
            &sparsity_rows,
        )?;
    }
    Ok(())
}
