//! Selection of the tuning parameter by held-out likelihood or cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::classify::{error_rate, fit_lda, LabeledData};
use crate::data::DataMatrix;
use crate::error::{Result, SpiceError};
use crate::estimators::{scale_decompose, second_moment, spice_from_covariance, SpiceMode};
use crate::linalg::{log_det_pd, SymmetricMatrix};
use crate::rng::rng_from_seed;
use crate::solver::{EstimateReport, PenaltySpec, SolverConfig};

/// Number of points in [`LambdaGrid::default_for`].
pub const DEFAULT_GRID_SIZE: usize = 20;

/// Strictly increasing, nonempty list of candidate `lambda` values.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SpiceError::InvalidParameter("lambda grid is empty".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(SpiceError::InvalidParameter("lambda values must be finite and nonnegative".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpiceError::InvalidParameter("lambda grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `k` values spaced evenly in `log` between `lo` and `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi >= lo) || k == 0 {
            return Err(SpiceError::InvalidParameter(format!(
                "log grid needs 0 < lo <= hi and k >= 1, got {lo}:{hi}:{k}"
            )));
        }
        if k == 1 || hi == lo {
            return Self::new(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (k - 1) as f64;
        let mut values: Vec<f64> = (0..k).map(|i| (a + step * i as f64).exp()).collect();
        values[0] = lo;
        values[k - 1] = hi;
        Self::new(values)
    }

    /// [`DEFAULT_GRID_SIZE`] log-spaced values from `0.01 lambda_ref` to
    /// `lambda_ref`, the largest absolute off-diagonal sample correlation.
    pub fn default_for(sigma_hat: &SymmetricMatrix) -> Result<Self> {
        let reference = scale_decompose(sigma_hat)?.gamma_hat.max_abs_offdiag();
        if reference == 0.0 {
            return Self::new(vec![0.0]);
        }
        Self::log_spaced(0.01 * reference, reference, DEFAULT_GRID_SIZE)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    ValidationLikelihood,
    CvLikelihood,
    CvClassificationError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub best_lambda: f64,
    /// `(lambda, score)` for every grid value whose fit succeeded, in grid order.
    pub criterion_values: Vec<(f64, f64)>,
    pub criterion: Criterion,
    /// Grid values dropped because a fit failed, with the error.
    pub failures: Vec<(f64, SpiceError)>,
}

impl TuningResult {
    fn from_scores(criterion: Criterion, scored: Vec<(f64, Result<f64>)>) -> Result<Self> {
        let mut criterion_values = Vec::new();
        let mut failures = Vec::new();
        for (lambda, score) in scored {
            match score {
                Ok(s) => criterion_values.push((lambda, s)),
                Err(e) => failures.push((lambda, e)),
            }
        }
        // grid is increasing, so `<=` breaks ties toward the larger lambda
        let mut best: Option<(f64, f64)> = None;
        for &(lambda, score) in &criterion_values {
            if best.is_none_or(|(_, b)| score <= b) {
                best = Some((lambda, score));
            }
        }
        let (best_lambda, _) = best.ok_or(SpiceError::AllFitsFailed)?;
        Ok(Self {
            best_lambda,
            criterion_values,
            criterion,
            failures,
        })
    }
}

/// SPICE configuration with `lambda` left open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiceFitter {
    pub mode: SpiceMode,
    pub pen_template: PenaltySpec,
    pub cfg: SolverConfig,
}

impl SpiceFitter {
    pub fn new(mode: SpiceMode, pen_template: PenaltySpec, cfg: SolverConfig) -> Self {
        Self {
            mode,
            pen_template,
            cfg,
        }
    }

    pub fn fit(&self, sigma_hat: &SymmetricMatrix, lambda: f64) -> Result<EstimateReport> {
        spice_from_covariance(sigma_hat, self.mode, &self.pen_template.with_lambda(lambda), &self.cfg)
    }
}

/// Held-out negative log-likelihood `tr(Omega_hat S_val) - log det Omega_hat`.
pub fn validation_score(omega_hat: &SymmetricMatrix, sigma_val: &SymmetricMatrix) -> Result<f64> {
    Ok(omega_hat.trace_product(sigma_val)? - log_det_pd(omega_hat)?)
}

/// Second moment of `x` about `center`.
fn scatter_about(x: &DataMatrix, center: &[f64]) -> SymmetricMatrix {
    let p = x.p();
    let values: Vec<f64> = x.rows().flat_map(|r| r.iter().zip(center).map(|(v, c)| v - c)).collect();
    second_moment(&DataMatrix::new(x.n(), p, values).expect("shape unchanged"))
}

/// Fits on `x_train` at every grid value and scores against `x_val`, whose
/// scatter is taken about the training mean.
pub fn select_lambda_validation(
    x_train: &DataMatrix,
    x_val: &DataMatrix,
    grid: &LambdaGrid,
    fitter: &SpiceFitter,
) -> Result<TuningResult> {
    x_train.require_observations(2)?;
    if x_val.p() != x_train.p() {
        return Err(SpiceError::DimensionMismatch {
            expected: x_train.p(),
            found: x_val.p(),
        });
    }
    let center = x_train.means();
    let sigma_train = scatter_about(x_train, &center);
    let sigma_val = scatter_about(x_val, &center);
    let scored: Vec<(f64, Result<f64>)> = grid
        .values()
        .par_iter()
        .map(|&lambda| {
            let score = fitter
                .fit(&sigma_train, lambda)
                .and_then(|r| validation_score(&r.omega_hat, &sigma_val));
            (lambda, score)
        })
        .collect();
    TuningResult::from_scores(Criterion::ValidationLikelihood, scored)
}

/// Assigns each of `n` rows to one of `k` folds. With labels, each class is
/// shuffled separately and dealt round-robin, continuing the rotation across
/// classes, so fold class proportions differ by at most one row.
pub fn fold_assignment(n: usize, k: usize, labels: Option<&[u8]>, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut fold = vec![0; n];
    let groups: Vec<Vec<usize>> = match labels {
        Some(l) => [0u8, 1]
            .iter()
            .map(|&c| (0..n).filter(|&i| l[i] == c).collect())
            .collect(),
        None => vec![(0..n).collect()],
    };
    let mut next = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Both cross-validation criteria for every grid value. The second is `None`
/// when no labels were given.
#[derive(Debug, Clone)]
pub struct CvScores {
    pub likelihood: TuningResult,
    pub classification: Option<TuningResult>,
}

/// `k`-fold cross-validation. With labels, rows are centered on their
/// training-fold class means (the pooled within-class covariance is what is
/// being estimated) and folds are stratified; both criteria come from the
/// same fits.
pub fn cross_validate(
    x: &DataMatrix,
    labels: Option<&[u8]>,
    k: usize,
    grid: &LambdaGrid,
    fitter: &SpiceFitter,
    seed: u64,
) -> Result<CvScores> {
    let n = x.n();
    if k < 2 || k > n {
        return Err(SpiceError::InvalidParameter(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let largest_fold = n.div_ceil(k);
    if n - largest_fold < 2 {
        return Err(SpiceError::TooFewObservations {
            required: largest_fold + 2,
            found: n,
        });
    }
    let labeled = match labels {
        Some(l) => Some(LabeledData::new(x.clone(), l.to_vec())?),
        None => None,
    };
    let fold = fold_assignment(n, k, labels, seed);

    struct FoldData {
        sigma_train: SymmetricMatrix,
        sigma_val: SymmetricMatrix,
        train: Option<LabeledData>,
        val: Option<LabeledData>,
    }
    let folds: Vec<FoldData> = (0..k)
        .map(|f| {
            let train_idx: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let val_idx: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            match &labeled {
                Some(d) => {
                    let train = d.select_rows(&train_idx);
                    let val = d.select_rows(&val_idx);
                    let means = train.class_means();
                    FoldData {
                        sigma_train: second_moment(&train.centered_on(&means)),
                        sigma_val: second_moment(&val.centered_on(&means)),
                        train: Some(train),
                        val: Some(val),
                    }
                }
                None => {
                    let train = x.select_rows(&train_idx);
                    let val = x.select_rows(&val_idx);
                    let center = train.means();
                    FoldData {
                        sigma_train: scatter_about(&train, &center),
                        sigma_val: scatter_about(&val, &center),
                        train: None,
                        val: None,
                    }
                }
            }
        })
        .collect();

    let per_lambda: Vec<(f64, Result<(f64, Option<f64>)>)> = grid
        .values()
        .par_iter()
        .map(|&lambda| {
            let mut lik = 0.0;
            let mut err = 0.0;
            for fd in &folds {
                let report = match fitter.fit(&fd.sigma_train, lambda) {
                    Ok(r) => r,
                    Err(e) => return (lambda, Err(e)),
                };
                match validation_score(&report.omega_hat, &fd.sigma_val) {
                    Ok(s) => lik += s,
                    Err(e) => return (lambda, Err(e)),
                }
                if let (Some(train), Some(val)) = (&fd.train, &fd.val) {
                    match fit_lda(train, &report.omega_hat).and_then(|m| error_rate(&m, val)) {
                        Ok(e) => err += e,
                        Err(e) => return (lambda, Err(e)),
                    }
                }
            }
            let kf = k as f64;
            (lambda, Ok((lik / kf, labeled.as_ref().map(|_| err / kf))))
        })
        .collect();

    let likelihood = TuningResult::from_scores(
        Criterion::CvLikelihood,
        per_lambda.iter().map(|(l, r)| (*l, r.clone().map(|s| s.0))).collect(),
    )?;
    let classification = match labeled {
        Some(_) => Some(TuningResult::from_scores(
            Criterion::CvClassificationError,
            per_lambda
                .iter()
                .map(|(l, r)| (*l, r.clone().map(|s| s.1.expect("labels present"))))
                .collect(),
        )?),
        None => None,
    };
    Ok(CvScores {
        likelihood,
        classification,
    })
}

/// `k`-fold cross-validation with the requested criterion.
pub fn select_lambda_cv(
    x: &DataMatrix,
    k: usize,
    grid: &LambdaGrid,
    criterion: Criterion,
    fitter: &SpiceFitter,
    labels: Option<&[u8]>,
    seed: u64,
) -> Result<TuningResult> {
    match criterion {
        Criterion::CvClassificationError if labels.is_none() => Err(SpiceError::MissingLabels),
        Criterion::CvClassificationError => Ok(cross_validate(x, labels, k, grid, fitter, seed)?
            .classification
            .expect("labels present")),
        Criterion::CvLikelihood => Ok(cross_validate(x, labels, k, grid, fitter, seed)?.likelihood),
        Criterion::ValidationLikelihood => Err(SpiceError::InvalidParameter(
            "validation likelihood needs a separate validation set".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(LambdaGrid::new(vec![]).is_err());
        assert!(LambdaGrid::new(vec![0.1, 0.1]).is_err());
        assert!(LambdaGrid::new(vec![0.2, 0.1]).is_err());
        assert!(LambdaGrid::new(vec![-0.1]).is_err());
        let g = LambdaGrid::log_spaced(0.01, 1.0, 3).unwrap();
        assert_eq!(g.values()[0], 0.01);
        assert!((g.values()[1] - 0.1).abs() < 1e-15);
        assert_eq!(g.values()[2], 1.0);
    }

    #[test]
    fn default_grid_spans_largest_correlation() {
        let s = SymmetricMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let g = LambdaGrid::default_for(&s).unwrap();
        assert_eq!(g.len(), DEFAULT_GRID_SIZE);
        assert!((g.values()[DEFAULT_GRID_SIZE - 1] - 0.5).abs() < 1e-15);
        assert!((g.values()[0] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn validation_score_examples() {
        let s = SymmetricMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        assert!((validation_score(&SymmetricMatrix::identity(2), &s).unwrap() - 3.0).abs() < 1e-15);
        let v = validation_score(&SymmetricMatrix::from_diagonal(&[2.0]), &SymmetricMatrix::identity(1)).unwrap();
        assert!((v - (2.0 - 2.0_f64.ln())).abs() < 1e-15);
        assert!((v - 1.3069).abs() < 1e-4);
    }

    #[test]
    fn ties_go_to_larger_lambda() {
        let r = TuningResult::from_scores(
            Criterion::CvClassificationError,
            vec![(0.1, Ok(0.2)), (0.2, Ok(0.1)), (0.3, Ok(0.1)), (0.4, Ok(0.3))],
        )
        .unwrap();
        assert_eq!(r.best_lambda, 0.3);
    }

    #[test]
    fn failed_fits_are_excluded() {
        let r = TuningResult::from_scores(
            Criterion::CvLikelihood,
            vec![(0.1, Err(SpiceError::AllFitsFailed)), (0.2, Ok(5.0))],
        )
        .unwrap();
        assert_eq!(r.best_lambda, 0.2);
        assert_eq!(r.failures.len(), 1);
        let none = TuningResult::from_scores(Criterion::CvLikelihood, vec![(0.1, Err(SpiceError::AllFitsFailed))]);
        assert_eq!(none.unwrap_err(), SpiceError::AllFitsFailed);
    }

    #[test]
    fn folds_partition_rows() {
        let labels: Vec<u8> = (0..23).map(|i| u8::from(i % 3 == 0)).collect();
        for lab in [None, Some(&labels[..])] {
            let f = fold_assignment(23, 5, lab, 3);
            assert_eq!(f.len(), 23);
            let mut sizes = [0; 5];
            for &k in &f {
                sizes[k] += 1;
            }
            assert_eq!(sizes.iter().sum::<usize>(), 23);
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert_eq!(f, fold_assignment(23, 5, lab, 3));
        }
    }
}
