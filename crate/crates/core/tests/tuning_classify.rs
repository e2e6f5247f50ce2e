use proptest::prelude::*;
use spice::classify::{fit_lda, lda_classify, t_statistic_ranking, LabeledData};
use spice::estimators::{sample_covariance, SpiceMode};
use spice::linalg::log_det_pd;
use spice::simulation::{build_model, sample_mvn, ModelSpec};
use spice::tuning::{select_lambda_cv, select_lambda_validation, validation_score, Criterion, LambdaGrid, SpiceFitter};
use spice::{DataMatrix, PenaltySpec, SolverConfig, SymmetricMatrix};

fn fitter() -> SpiceFitter {
    SpiceFitter::new(SpiceMode::Correlation, PenaltySpec::lasso(0.1), SolverConfig::default())
}

fn identity_truth(p: usize) -> spice::simulation::GroundTruth {
    // only sigma0 is used for sampling
    let mut t = build_model(&ModelSpec::omega1(p)).unwrap();
    t.sigma0 = SymmetricMatrix::identity(p);
    t.omega0 = SymmetricMatrix::identity(p);
    t
}

#[test]
fn identity_truth_favors_heavy_penalty() {
    let t = identity_truth(8);
    let xt = sample_mvn(&t, 2000, 1).unwrap();
    let xv = sample_mvn(&t, 2000, 2).unwrap();
    let grid = LambdaGrid::new(vec![1e-4, 0.01, 0.1, 1.0]).unwrap();
    let r = select_lambda_validation(&xt, &xv, &grid, &fitter()).unwrap();
    let scores = &r.criterion_values;
    assert!(scores[3].1 < scores[0].1, "{scores:?}");
}

#[test]
fn dense_truth_favors_light_penalty() {
    let t = build_model(&ModelSpec::omega4(8, 3)).unwrap();
    let xt = sample_mvn(&t, 2000, 1).unwrap();
    let xv = sample_mvn(&t, 2000, 2).unwrap();
    let grid = LambdaGrid::new(vec![1e-4, 10.0]).unwrap();
    let r = select_lambda_validation(&xt, &xv, &grid, &fitter()).unwrap();
    assert_eq!(r.best_lambda, 1e-4);
}

#[test]
fn validation_score_is_bounded_by_the_likelihood_maximum() {
    let t = build_model(&ModelSpec::omega2(6)).unwrap();
    let sv = sample_covariance(&sample_mvn(&t, 50, 4).unwrap()).unwrap();
    let floor = 6.0 + log_det_pd(&sv).unwrap();
    let st = sample_covariance(&sample_mvn(&t, 50, 5).unwrap()).unwrap();
    for lam in [0.0, 0.05, 0.3] {
        let r = fitter().fit(&st, lam).unwrap();
        assert!(validation_score(&r.omega_hat, &sv).unwrap() - floor >= -1e-9);
    }
}

#[test]
fn dominated_grid_value_does_not_move_the_choice() {
    let t = build_model(&ModelSpec::omega1(6)).unwrap();
    let xt = sample_mvn(&t, 60, 1).unwrap();
    let xv = sample_mvn(&t, 60, 2).unwrap();
    let base = LambdaGrid::log_spaced(0.01, 0.5, 6).unwrap();
    let a = select_lambda_validation(&xt, &xv, &base, &fitter()).unwrap();
    let best_score = a.criterion_values.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    // a huge penalty gives the diagonal fit, which scores worse here
    let mut values = base.values().to_vec();
    values.push(50.0);
    let b = select_lambda_validation(&xt, &xv, &LambdaGrid::new(values).unwrap(), &fitter()).unwrap();
    assert!(b.criterion_values.last().unwrap().1 > best_score);
    assert_eq!(a.best_lambda, b.best_lambda);
}

#[test]
fn separable_labels_reach_zero_cv_error() {
    let n = 40;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let c = (i % 2) as u8;
        let shift = if c == 1 { 10.0 } else { -10.0 };
        rows.push(vec![shift + (i as f64 * 0.37).sin(), (i as f64 * 1.3).cos(), (i as f64 * 0.7).sin()]);
        labels.push(c);
    }
    let x = DataMatrix::from_rows(&rows).unwrap();
    let grid = LambdaGrid::new(vec![0.01, 0.1, 0.5]).unwrap();
    let r = select_lambda_cv(&x, 5, &grid, Criterion::CvClassificationError, &fitter(), Some(&labels), 3).unwrap();
    let best = r.criterion_values.iter().find(|c| c.0 == r.best_lambda).unwrap();
    assert_eq!(best.1, 0.0);
    let again = select_lambda_cv(&x, 5, &grid, Criterion::CvClassificationError, &fitter(), Some(&labels), 3).unwrap();
    assert_eq!(r, again);
}

fn labeled(rows: &[Vec<f64>]) -> Option<LabeledData> {
    let labels: Vec<u8> = (0..rows.len()).map(|i| (i % 2) as u8).collect();
    LabeledData::new(DataMatrix::from_rows(rows).ok()?, labels).ok()
}

fn lda_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 3), 6..12),
        prop::collection::vec(0.2..2.0f64, 3),
        prop::collection::vec(-3.0..3.0f64, 3),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lda_matches_difference_form((rows, diag, x) in lda_case()) {
        let data = labeled(&rows).unwrap();
        let omega = SymmetricMatrix::from_fn(3, |i, j| if i == j { diag[i] } else { 0.1 });
        let m = fit_lda(&data, &omega).unwrap();
        let d: Vec<f64> = (0..3).map(|k| m.mu[1][k] - m.mu[0][k]).collect();
        let lhs = omega.bilinear(&d, &x).unwrap();
        let rhs = 0.5 * (omega.bilinear(&m.mu[1], &m.mu[1]).unwrap() - omega.bilinear(&m.mu[0], &m.mu[0]).unwrap())
            - (m.log_prior[1] - m.log_prior[0]);
        // skip numerically tied cases
        prop_assume!((lhs - rhs).abs() > 1e-9);
        prop_assert_eq!(lda_classify(&m, &x).unwrap(), u8::from(lhs > rhs));
        let scaled = fit_lda(&data, &omega.scaled(3.7)).unwrap();
        if m.log_prior[0] == m.log_prior[1] {
            prop_assert_eq!(lda_classify(&scaled, &x).unwrap(), lda_classify(&m, &x).unwrap());
        }
    }

    #[test]
    fn t_ranking_ignores_class_names(rows in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 4), 8..14)) {
        let data = labeled(&rows).unwrap();
        let flipped = LabeledData::new(data.x.clone(), data.labels.iter().map(|l| 1 - l).collect()).unwrap();
        prop_assert_eq!(t_statistic_ranking(&data, 4).unwrap(), t_statistic_ranking(&flipped, 4).unwrap());
    }
}
