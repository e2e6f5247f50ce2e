use spice::estimators::{sample_covariance, scale_decompose, spice_correlation_fit};
use spice::linalg::{inverse_pd, relative_frobenius};
use spice::simulation::{build_model, sample_mvn, ModelSpec};
use spice::solver::{objective_value, solve, SolverState};
use spice::{CholeskyFactor, PenaltySpec, SolverConfig, SymmetricMatrix};
use spice_oracles::{jacobi_eigenvalues, proximal_gradient_lasso, Mat};

fn random_covariance(p: usize, n: usize, seed: u64) -> SymmetricMatrix {
    let truth = build_model(&ModelSpec::omega4(p.max(3), seed)).unwrap();
    let x = sample_mvn(&truth, n, seed + 1000).unwrap();
    let s = sample_covariance(&x).unwrap();
    if s.dim() == p {
        s
    } else {
        SymmetricMatrix::from_fn(p, |i, j| s.get(i, j))
    }
}

fn check_invariants(r: &spice::EstimateReport) {
    assert!(r.worst_ascent() <= 1e-9, "ascent {}", r.worst_ascent());
    assert!(jacobi_eigenvalues(&r.omega_hat.to_rows())[0] > 0.0);
}

#[test]
fn matches_proximal_gradient_on_p4() {
    for seed in 0..5 {
        let s = random_covariance(4, 12, seed);
        let lam = 0.2;
        let r = solve(&s, &PenaltySpec::lasso(lam), &SolverConfig::default()).unwrap();
        check_invariants(&r);
        let ours = objective_value(&s, &r.omega_hat, &PenaltySpec::lasso(lam)).unwrap();
        let (_, oracle) = proximal_gradient_lasso(&s.to_rows(), lam, 1e-9, 200_000);
        assert!((ours - oracle).abs() < 1e-4, "seed {seed}: {ours} vs {oracle}");
        assert!(ours <= oracle + 1e-9);
    }
}

#[test]
fn correlation_fit_matches_oracle_on_gamma() {
    let s = random_covariance(3, 10, 7);
    let fit = spice_correlation_fit(&s, &PenaltySpec::lasso(0.2), &SolverConfig::default()).unwrap();
    let gamma = fit.scale.gamma_hat.to_rows();
    let ours = objective_value(&fit.scale.gamma_hat, &fit.kappa.omega_hat, &PenaltySpec::lasso(0.2)).unwrap();
    let (_, oracle) = proximal_gradient_lasso(&gamma, 0.2, 1e-9, 200_000);
    assert!((ours - oracle).abs() < 1e-4);
}

#[test]
fn unpenalized_solve_is_the_inverse() {
    for p in [3, 5, 10] {
        let s = random_covariance(p, 200, p as u64);
        let r = solve(&s, &PenaltySpec::lasso(0.0), &SolverConfig::default()).unwrap();
        check_invariants(&r);
        let inv = inverse_pd(&s).unwrap();
        assert!(relative_frobenius(&r.omega_hat, &inv).unwrap() < 1e-5);
    }
}

#[test]
fn huge_penalty_decouples_the_diagonal() {
    let s = random_covariance(6, 30, 3);
    let r = solve(&s, &PenaltySpec::lasso(1e6), &SolverConfig::default()).unwrap();
    assert_eq!(r.nnz_offdiag(), 0);
    for j in 0..6 {
        assert!((r.omega_hat.get(j, j) * s.get(j, j) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn correlation_variant_at_zero_penalty_is_the_inverse() {
    let s = random_covariance(5, 100, 11);
    let fit = spice_correlation_fit(&s, &PenaltySpec::lasso(0.0), &SolverConfig::default()).unwrap();
    assert!(relative_frobenius(&fit.omega.omega_hat, &inverse_pd(&s).unwrap()).unwrap() < 1e-5);
    for lam in [0.05, 0.2, 0.5] {
        let fit = spice_correlation_fit(&s, &PenaltySpec::lasso(lam), &SolverConfig::default()).unwrap();
        assert_eq!(fit.kappa.zero_pattern, fit.omega.zero_pattern);
        let w = &fit.scale.w_diag;
        for i in 0..5 {
            for j in 0..5 {
                let expect = fit.kappa.omega_hat.get(i, j) / (w[i] * w[j]);
                assert!((fit.omega.omega_hat.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }
    assert_eq!(scale_decompose(&s).unwrap().gamma_hat.get(2, 2), 1.0);
}

#[test]
fn incremental_omega_tracks_recomputation() {
    use rand::RngExt;
    let p = 6;
    let mut rng = spice::rng::rng_from_seed(5);
    let mut t: Mat = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut state = SolverState::new(CholeskyFactor::from_rows(&t).unwrap(), PenaltySpec::lasso(0.1)).unwrap();
    for _ in 0..100 {
        let l = rng.random_range(1..p);
        let c = rng.random_range(0..l);
        let new = rng.random_range(-1.0..1.0);
        let old = t[l][c];
        t[l][c] = new;
        state.update_omega_fast(l, c, new, old);
    }
    // Omega = T^T T, entry by entry
    for i in 0..p {
        for j in 0..p {
            let direct: f64 = (0..p).map(|k| t[k][i] * t[k][j]).sum();
            assert!((state.omega().get(i, j) - direct).abs() < 1e-10);
        }
    }
}
