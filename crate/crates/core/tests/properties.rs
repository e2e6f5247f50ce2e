use proptest::prelude::*;
use spice::estimators::sample_covariance;
use spice::linalg::relative_frobenius;
use spice_oracles::jacobi_eigenvalues;
use spice::solver::{initialize_factor, objective_value, solve};
use spice::{DataMatrix, InitStrategy, PenaltySpec, SolverConfig};

fn data(n: usize, p: usize) -> impl Strategy<Value = DataMatrix> {
    prop::collection::vec(-3.0..3.0f64, n * p).prop_map(move |v| DataMatrix::new(n, p, v).unwrap())
}

fn case() -> impl Strategy<Value = (DataMatrix, f64, Vec<usize>)> {
    (2usize..8)
        .prop_flat_map(|p| (data(2 * p + 4, p), 0.01..0.6f64, Just((0..p).collect::<Vec<_>>()).prop_shuffle()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn estimate_is_permutation_equivariant((x, lam, perm) in case()) {
        let s = sample_covariance(&x).unwrap();
        let pen = PenaltySpec::lasso(lam);
        let cfg = SolverConfig::default();
        let a = solve(&s, &pen, &cfg).unwrap();
        let b = solve(&s.permuted(&perm).unwrap(), &pen, &cfg).unwrap();
        let moved = a.omega_hat.permuted(&perm).unwrap();
        prop_assert!(relative_frobenius(&moved, &b.omega_hat).unwrap() < 1e-5);
        prop_assert_eq!(a.zero_pattern.permuted(&perm).unwrap(), b.zero_pattern);
    }

    #[test]
    fn estimate_is_pd_and_descends((x, lam, _perm) in case()) {
        let s = sample_covariance(&x).unwrap();
        let pen = PenaltySpec::lasso(lam);
        let r = solve(&s, &pen, &SolverConfig::default()).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.worst_ascent() <= 1e-9);
        prop_assert!(jacobi_eigenvalues(&r.omega_hat.to_rows())[0] > 0.0);
        prop_assert!(r.zero_pattern.is_symmetric());
        // never worse than the diagonal start
        let diag = initialize_factor(&s, InitStrategy::Diagonal).unwrap().gram();
        let f_diag = objective_value(&s, &diag, &pen).unwrap();
        prop_assert!(objective_value(&s, &r.omega_hat, &pen).unwrap() <= f_diag + 1e-9);
    }

    #[test]
    fn penalty_above_largest_covariance_gives_diagonal((x, _lam, _perm) in case()) {
        let s = sample_covariance(&x).unwrap();
        let lam = s.max_abs_offdiag() * 1.01 + 1e-12;
        let r = solve(&s, &PenaltySpec::lasso(lam), &SolverConfig::default()).unwrap();
        prop_assert_eq!(r.nnz_offdiag(), 0);
        for j in 0..s.dim() {
            prop_assert!((r.omega_hat.get(j, j) * s.get(j, j) - 1.0).abs() < 1e-6);
        }
    }
}
