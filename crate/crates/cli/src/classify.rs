//! Repeated random-split evaluation of plug-in LDA classifiers.

use std::path::PathBuf;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use spice::classify::{error_rate, fit_lda, stratified_split, t_statistic_ranking, LabeledData};
use spice::estimators::{naive_bayes_diagonal, sample_covariance};
use spice::evaluation::summarize;
use spice::linalg::inverse_pd;
use spice::rng::derive_seed;
use spice::tuning::{cross_validate, LambdaGrid, SpiceFitter};
use spice::{SpiceError, SymmetricMatrix};

use crate::config::{FitSettings, GridSpec};
use crate::io::{fmt_opt, read_table, write_rows};
use crate::UsageError;

/// How the SPICE penalty is chosen on each training split: (A) cross-validated
/// likelihood or (B) cross-validated classification error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schemes(pub &'static [Scheme]);

impl FromStr for Schemes {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Schemes(&[Scheme::A])),
            "B" | "b" => Ok(Schemes(&[Scheme::B])),
            "both" => Ok(Schemes(&[Scheme::A, Scheme::B])),
            _ => Err(format!("scheme must be A, B or both, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyArgs {
    pub input: PathBuf,
    pub label_column: String,
    pub n_splits: usize,
    /// Training rows per class; defaults to two thirds of each class.
    pub train_counts: Option<[usize; 2]>,
    /// Features kept by t-statistic ranking on each training split; all when `None`.
    pub p_keep: Option<usize>,
    pub schemes: Schemes,
    pub folds: usize,
    pub grid: Option<GridSpec>,
    pub fit: FitSettings,
    pub seed: u64,
    pub out: PathBuf,
}

/// Test error (fraction) of each classifier on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitErrors {
    pub naive_bayes: f64,
    /// One entry per requested scheme, in order.
    pub spice: Vec<(Scheme, f64)>,
}

#[derive(Debug, Clone)]
pub struct ClassifyOutcome {
    pub splits: Vec<SplitErrors>,
    pub failures: Vec<(usize, SpiceError)>,
}

impl ClassifyOutcome {
    pub fn naive_bayes_errors(&self) -> Vec<f64> {
        self.splits.iter().map(|s| s.naive_bayes).collect()
    }

    pub fn spice_errors(&self, scheme: Scheme) -> Vec<f64> {
        self.splits
            .iter()
            .filter_map(|s| s.spice.iter().find(|(k, _)| *k == scheme).map(|e| e.1))
            .collect()
    }
}

fn one_split(args: &ClassifyArgs, data: &LabeledData, counts: [usize; 2], seed: u64) -> Result<SplitErrors, SpiceError> {
    let (train, test) = stratified_split(data, counts, derive_seed(seed, 0))?;
    let (train, test) = match args.p_keep {
        Some(k) => {
            let keep = t_statistic_ranking(&train, k)?;
            (train.select_columns(&keep)?, test.select_columns(&keep)?)
        }
        None => (train, test),
    };
    let centered = train.within_class_centered();
    let nb = inverse_pd(&naive_bayes_diagonal(&centered)?)?;
    let naive_bayes = error_rate(&fit_lda(&train, &nb)?, &test)?;

    let mut spice = Vec::new();
    if !args.schemes.0.is_empty() {
        let s = sample_covariance(&centered)?;
        let grid = match args.grid {
            Some(g) => g.build().map_err(|e| SpiceError::InvalidParameter(e.0))?,
            None => LambdaGrid::default_for(&s)?,
        };
        let pen = args.fit.penalty(0.0).map_err(|e| SpiceError::InvalidParameter(e.0))?;
        let fitter = SpiceFitter::new(args.fit.mode, pen, args.fit.solver);
        // both schemes are read off the same cross-validation fits
        let cv = cross_validate(&train.x, Some(&train.labels), args.folds, &grid, &fitter, derive_seed(seed, 1))?;
        for &scheme in args.schemes.0 {
            let lambda = match scheme {
                Scheme::A => cv.likelihood.best_lambda,
                Scheme::B => cv.classification.as_ref().expect("labels given").best_lambda,
            };
            let omega: SymmetricMatrix = fitter.fit(&s, lambda)?.omega_hat;
            spice.push((scheme, error_rate(&fit_lda(&train, &omega)?, &test)?));
        }
    }
    Ok(SplitErrors { naive_bayes, spice })
}

/// Runs `n_splits` independent splits; split `i` uses a seed derived from
/// `(seed, i)`, so results do not depend on scheduling.
pub fn classify(args: &ClassifyArgs, data: &LabeledData) -> anyhow::Result<ClassifyOutcome> {
    let available = data.class_counts();
    if available.iter().any(|&c| c == 0) {
        return Err(UsageError("both classes must be present".into()).into());
    }
    let counts = args
        .train_counts
        .unwrap_or(available.map(|c| ((2 * c) as f64 / 3.0).round() as usize));
    if args.n_splits == 0 {
        return Err(UsageError("need at least one split".into()).into());
    }
    info!("{} splits, training counts {counts:?}", args.n_splits);
    let results: Vec<_> = (0..args.n_splits)
        .into_par_iter()
        .map(|i| (i, one_split(args, data, counts, derive_seed(args.seed, i as u64))))
        .collect();
    let mut splits = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(s) => splits.push(s),
            Err(e) => {
                warn!("split {i} failed: {e}");
                failures.push((i, e));
            }
        }
    }
    if splits.is_empty() {
        anyhow::bail!("every split failed; first error: {}", failures[0].1);
    }
    Ok(ClassifyOutcome { splits, failures })
}

fn pct_summary(errors: &[f64]) -> (Option<f64>, Option<f64>) {
    let pct: Vec<f64> = errors.iter().map(|e| 100.0 * e).collect();
    match pct.len() {
        0 => (None, None),
        1 => (Some(pct[0]), None),
        _ => {
            let s = summarize(&pct).expect("two or more values");
            (Some(s.mean), Some(s.se))
        }
    }
}

/// Reads the labeled CSV, runs the splits and writes `classification_report.csv`.
pub fn run_classify(args: &ClassifyArgs) -> anyhow::Result<ClassifyOutcome> {
    let table = read_table(&args.input)?;
    let j = table.column_index(&args.label_column)?;
    let (_, x) = table.data(Some(j))?;
    let data = LabeledData::new(x, table.labels(j)?).map_err(|e| UsageError(e.to_string()))?;
    let outcome = classify(args, &data)?;
    let mut rows = Vec::new();
    let (m, se) = pct_summary(&outcome.naive_bayes_errors());
    rows.push(vec!["naive_bayes".into(), "NA".into(), fmt_opt(m), fmt_opt(se)]);
    for &scheme in args.schemes.0 {
        let (m, se) = pct_summary(&outcome.spice_errors(scheme));
        rows.push(vec!["spice".into(), format!("{scheme:?}"), fmt_opt(m), fmt_opt(se)]);
    }
    std::fs::create_dir_all(&args.out)?;
    write_rows(
        &args.out.join("classification_report.csv"),
        &["estimator", "scheme", "mean_error_pct", "se"],
        &rows,
    )?;
    Ok(outcome)
}
