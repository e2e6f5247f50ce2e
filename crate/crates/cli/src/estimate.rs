//! Fitting a single data set: `estimate` and `tune`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use spice::estimators::{ledoit_wolf, naive_bayes_diagonal, sample_covariance};
use spice::linalg::inverse_pd;
use spice::simulation::support_of;
use spice::tuning::{select_lambda_cv, select_lambda_validation, Criterion, LambdaGrid, SpiceFitter, TuningResult};
use spice::{DataMatrix, SymmetricMatrix};

use crate::config::{FitSettings, GridSpec};
use crate::io::{read_table, write_mask, write_matrix, write_rows};
use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlainEstimator {
    Spice,
    LedoitWolf,
    Sample,
    NaiveBayes,
}

impl FromStr for PlainEstimator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spice" => Ok(Self::Spice),
            "lw" | "ledoit_wolf" => Ok(Self::LedoitWolf),
            "sample" => Ok(Self::Sample),
            "naive_bayes" | "nb" => Ok(Self::NaiveBayes),
            _ => Err(format!("unknown estimator `{s}`")),
        }
    }
}

impl PlainEstimator {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spice => "spice",
            Self::LedoitWolf => "ledoit_wolf",
            Self::Sample => "sample",
            Self::NaiveBayes => "naive_bayes",
        }
    }
}

/// `cv:k`, k-fold cross-validated likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvSpec {
    pub k: usize,
}

impl FromStr for CvSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.strip_prefix("cv:")
            .and_then(|k| k.parse().ok())
            .map(|k| CvSpec { k })
            .ok_or_else(|| format!("expected cv:<k>, got `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct EstimateArgs {
    pub input: PathBuf,
    pub estimator: PlainEstimator,
    pub lambda: Option<f64>,
    pub tune: Option<CvSpec>,
    pub grid: Option<GridSpec>,
    pub fit: FitSettings,
    pub seed: u64,
    pub out: PathBuf,
}

fn grid_for(spec: Option<GridSpec>, sigma_hat: &SymmetricMatrix) -> anyhow::Result<LambdaGrid> {
    Ok(match spec {
        Some(g) => g.build()?,
        None => LambdaGrid::default_for(sigma_hat)?,
    })
}

/// Writes `omega_hat.csv`, `zero_pattern.csv` and `report.txt`.
pub fn run_estimate(args: &EstimateArgs) -> anyhow::Result<Vec<(String, String)>> {
    let table = read_table(&args.input)?;
    let (names, x) = table.data(None)?;
    let sigma_hat = sample_covariance(&x)?;
    let mut report: Vec<(String, String)> = vec![("estimator".into(), args.estimator.name().into())];
    let (omega, zero_pattern) = match args.estimator {
        PlainEstimator::Spice => {
            let lambda = match (args.lambda, args.tune) {
                (Some(_), Some(_)) => return Err(UsageError("give either --lambda or --tune, not both".into()).into()),
                (Some(l), None) => l,
                (None, Some(cv)) => {
                    let grid = grid_for(args.grid, &sigma_hat)?;
                    let fitter = SpiceFitter::new(args.fit.mode, args.fit.penalty(0.0)?, args.fit.solver);
                    select_lambda_cv(&x, cv.k, &grid, Criterion::CvLikelihood, &fitter, None, args.seed)?.best_lambda
                }
                (None, None) => return Err(UsageError("spice needs --lambda or --tune cv:<k>".into()).into()),
            };
            let fitter = SpiceFitter::new(args.fit.mode, args.fit.penalty(lambda)?, args.fit.solver);
            let r = fitter.fit(&sigma_hat, lambda)?;
            report.extend([
                ("lambda".to_string(), lambda.to_string()),
                ("q".to_string(), args.fit.q.to_string()),
                ("objective".to_string(), r.final_objective().to_string()),
                ("outer_iters".to_string(), r.outer_iters.to_string()),
                ("converged".to_string(), r.converged.to_string()),
                ("nnz_offdiag".to_string(), r.nnz_offdiag().to_string()),
            ]);
            (r.omega_hat, r.zero_pattern)
        }
        other => {
            let cov = match other {
                PlainEstimator::LedoitWolf => ledoit_wolf(&x)?,
                PlainEstimator::Sample => sample_covariance(&x)?,
                _ => naive_bayes_diagonal(&x)?,
            };
            let omega = inverse_pd(&cov)?;
            let zero_pattern = support_of(&omega, 0.0).complement_offdiag();
            let nnz = omega.dim() * (omega.dim() - 1) - zero_pattern.count_offdiag();
            for key in ["lambda", "q", "objective", "outer_iters", "converged"] {
                report.push((key.into(), "NA".into()));
            }
            report.push(("nnz_offdiag".into(), nnz.to_string()));
            (omega, zero_pattern)
        }
    };
    std::fs::create_dir_all(&args.out)?;
    write_matrix(&args.out.join("omega_hat.csv"), &names, &omega)?;
    write_mask(&args.out.join("zero_pattern.csv"), &names, &zero_pattern)?;
    write_report(&args.out.join("report.txt"), &report)?;
    Ok(report)
}

pub fn write_report(path: &Path, entries: &[(String, String)]) -> anyhow::Result<()> {
    let text: String = entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TuneArgs {
    pub input: PathBuf,
    /// Held-out data for the validation-likelihood criterion.
    pub validation: Option<PathBuf>,
    pub cv: Option<CvSpec>,
    /// Column holding 0/1 labels; selects the classification-error criterion.
    pub label_column: Option<String>,
    pub grid: Option<GridSpec>,
    pub fit: FitSettings,
    pub seed: u64,
    pub out: PathBuf,
}

/// Writes `tuning.csv` (lambda, score) and `tuning_report.txt`.
pub fn run_tune(args: &TuneArgs) -> anyhow::Result<TuningResult> {
    let table = read_table(&args.input)?;
    let label_col = args.label_column.as_deref().map(|c| table.column_index(c)).transpose()?;
    let (_, x) = table.data(label_col)?;
    let labels = label_col.map(|j| table.labels(j)).transpose()?;
    let grid = grid_for(args.grid, &sample_covariance(&x)?)?;
    let fitter = SpiceFitter::new(args.fit.mode, args.fit.penalty(0.0)?, args.fit.solver);
    let result = match (&args.validation, args.cv) {
        (Some(path), None) => {
            let (_, xv): (_, DataMatrix) = read_table(path)?.data(None)?;
            select_lambda_validation(&x, &xv, &grid, &fitter)?
        }
        (None, Some(cv)) => {
            let criterion = if labels.is_some() {
                Criterion::CvClassificationError
            } else {
                Criterion::CvLikelihood
            };
            select_lambda_cv(&x, cv.k, &grid, criterion, &fitter, labels.as_deref(), args.seed)?
        }
        _ => return Err(UsageError("tune needs exactly one of --validation or --tune cv:<k>".into()).into()),
    };
    std::fs::create_dir_all(&args.out)?;
    let rows: Vec<Vec<String>> = result
        .criterion_values
        .iter()
        .map(|(l, s)| vec![l.to_string(), s.to_string()])
        .collect();
    write_rows(&args.out.join("tuning.csv"), &["lambda", "score"], &rows)?;
    write_report(
        &args.out.join("tuning_report.txt"),
        &[
            ("criterion".into(), format!("{:?}", result.criterion)),
            ("best_lambda".into(), result.best_lambda.to_string()),
            ("failed_fits".into(), result.failures.len().to_string()),
        ],
    )?;
    Ok(result)
}
