//! Ground-truth concentration models and Gaussian sampling.

use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Result, SpiceError};
use crate::linalg::{cholesky_factor, extreme_eigenvalues, inverse_pd, SymmetricMatrix, EIGEN_TOL};
use crate::mask::BoolMask;
use crate::rng::rng_from_seed;

/// Value of the nonzero off-diagonal entries of the random sparse models.
pub const RANDOM_SPARSE_ENTRY: f64 = 0.5;

/// Band coefficients of the AR(4) concentration matrix, lag 0 through 4.
pub const AR4_BANDS: [f64; 5] = [1.0, 0.4, 0.2, 0.2, 0.1];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// `sigma_ij = rho^|i - j|`.
    Ar1 { rho: f64 },
    /// Banded concentration matrix with [`AR4_BANDS`].
    Ar4,
    /// `B + delta I` with Bernoulli(alpha) off-diagonal entries of
    /// [`RANDOM_SPARSE_ENTRY`] and `delta` fixing the condition number at `p`.
    RandomSparse { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub p: usize,
    pub seed: u64,
}

impl ModelSpec {
    /// AR(1) with `rho = 0.7`.
    pub fn omega1(p: usize) -> Self {
        Self {
            kind: ModelKind::Ar1 { rho: 0.7 },
            p,
            seed: 0,
        }
    }

    pub fn omega2(p: usize) -> Self {
        Self {
            kind: ModelKind::Ar4,
            p,
            seed: 0,
        }
    }

    /// Random sparse, `alpha = 0.1`.
    pub fn omega3(p: usize, seed: u64) -> Self {
        Self {
            kind: ModelKind::RandomSparse { alpha: 0.1 },
            p,
            seed,
        }
    }

    /// Random sparse, `alpha = 0.5`.
    pub fn omega4(p: usize, seed: u64) -> Self {
        Self {
            kind: ModelKind::RandomSparse { alpha: 0.5 },
            p,
            seed,
        }
    }

    /// Short name used in output files: `omega1` .. `omega4` for the standard
    /// parameter values, otherwise a descriptive tag.
    pub fn name(&self) -> String {
        match self.kind {
            ModelKind::Ar1 { rho } if rho == 0.7 => "omega1".into(),
            ModelKind::Ar1 { rho } => format!("ar1_{rho}"),
            ModelKind::Ar4 => "omega2".into(),
            ModelKind::RandomSparse { alpha } if alpha == 0.1 => "omega3".into(),
            ModelKind::RandomSparse { alpha } if alpha == 0.5 => "omega4".into(),
            ModelKind::RandomSparse { alpha } => format!("sparse_{alpha}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub omega0: SymmetricMatrix,
    pub sigma0: SymmetricMatrix,
    /// Off-diagonal nonzeros of `omega0`.
    pub support: BoolMask,
    /// Number of true off-diagonal nonzeros, counted over ordered pairs.
    pub s: usize,
}

impl GroundTruth {
    fn from_pair(omega0: SymmetricMatrix, sigma0: SymmetricMatrix) -> Self {
        let support = support_of(&omega0, 0.0);
        let s = support.count_offdiag();
        Self {
            omega0,
            sigma0,
            support,
            s,
        }
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<GroundTruth> {
    let p = spec.p;
    if p < 2 {
        return Err(SpiceError::InvalidParameter(format!("model dimension must be at least 2, got {p}")));
    }
    match spec.kind {
        ModelKind::Ar1 { rho } => {
            if !(rho.abs() < 1.0) {
                return Err(SpiceError::InvalidParameter(format!("AR(1) needs |rho| < 1, got {rho}")));
            }
            let sigma0 = SymmetricMatrix::from_fn(p, |i, j| rho.powi((j - i) as i32));
            // closed-form tridiagonal inverse
            let scale = 1.0 / (1.0 - rho * rho);
            let omega0 = SymmetricMatrix::from_fn(p, |i, j| {
                if i == j {
                    if i == 0 || i == p - 1 {
                        scale
                    } else {
                        (1.0 + rho * rho) * scale
                    }
                } else if j == i + 1 {
                    -rho * scale
                } else {
                    0.0
                }
            });
            Ok(GroundTruth::from_pair(omega0, sigma0))
        }
        ModelKind::Ar4 => {
            let omega0 = SymmetricMatrix::from_fn(p, |i, j| AR4_BANDS.get(j - i).copied().unwrap_or(0.0));
            let sigma0 = inverse_pd(&omega0).map_err(|_| {
                SpiceError::DegenerateModel(format!("AR(4) concentration matrix is not positive definite at p = {p}"))
            })?;
            Ok(GroundTruth::from_pair(omega0, sigma0))
        }
        ModelKind::RandomSparse { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(SpiceError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            let coin = Bernoulli::new(alpha).map_err(|e| SpiceError::InvalidParameter(e.to_string()))?;
            let mut rng = rng_from_seed(spec.seed);
            for _attempt in 0..2 {
                let b = SymmetricMatrix::from_fn(p, |i, j| {
                    if i != j && coin.sample(&mut rng) {
                        RANDOM_SPARSE_ENTRY
                    } else {
                        0.0
                    }
                });
                let bounds = extreme_eigenvalues(&b, EIGEN_TOL)?;
                if bounds.max_eig <= bounds.min_eig {
                    continue;
                }
                // (max + delta) / (min + delta) = p
                let delta = (bounds.max_eig - p as f64 * bounds.min_eig) / (p as f64 - 1.0);
                let mut omega0 = b;
                for i in 0..p {
                    omega0.set(i, i, delta);
                }
                let sigma0 = inverse_pd(&omega0)?;
                return Ok(GroundTruth::from_pair(omega0, sigma0));
            }
            Err(SpiceError::DegenerateModel(
                "random sparse draw had no off-diagonal entries twice".into(),
            ))
        }
    }
}

/// `n` rows drawn iid from `N(0, sigma0)` as `z L^T`, `L` the Cholesky factor.
pub fn sample_mvn(truth: &GroundTruth, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(SpiceError::InvalidParameter("sample size must be positive".into()));
    }
    let p = truth.sigma0.dim();
    let l = cholesky_factor(&truth.sigma0)?;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..p {
            let row = l.row(i);
            values.push(row.iter().zip(&z).map(|(a, b)| a * b).sum());
        }
    }
    DataMatrix::new(n, p, values)
}

/// Off-diagonal positions with `|omega_ij| > tol`.
pub fn support_of(omega: &SymmetricMatrix, tol: f64) -> BoolMask {
    BoolMask::from_offdiag_fn(omega.dim(), |i, j| omega.get(i, j).abs() > tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_covariance_entries() {
        let t = build_model(&ModelSpec::omega1(3)).unwrap();
        let want = [[1.0, 0.7, 0.49], [0.7, 1.0, 0.7], [0.49, 0.7, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.sigma0.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ar1_concentration_closed_form() {
        let t = build_model(&ModelSpec::omega1(3)).unwrap();
        let o = &t.omega0;
        assert!((o.get(0, 0) - 1.0 / 0.51).abs() < 1e-12);
        assert!((o.get(2, 2) - 1.0 / 0.51).abs() < 1e-12);
        assert!((o.get(1, 1) - 1.49 / 0.51).abs() < 1e-12);
        assert!((o.get(0, 1) + 0.7 / 0.51).abs() < 1e-12);
        assert_eq!(o.get(0, 2), 0.0);
        assert!((o.get(0, 0) - 1.9608).abs() < 1e-4);
        assert!((o.get(1, 1) - 2.9216).abs() < 1e-4);
        assert!((o.get(0, 1) + 1.3725).abs() < 1e-4);
    }

    #[test]
    fn ar4_first_row() {
        let t = build_model(&ModelSpec::omega2(5)).unwrap();
        assert_eq!(t.omega0.row(0), &[1.0, 0.4, 0.2, 0.2, 0.1]);
    }

    #[test]
    fn supports() {
        assert_eq!(support_of(&SymmetricMatrix::identity(4), 0.0).count_offdiag(), 0);
        let t = build_model(&ModelSpec::omega1(3)).unwrap();
        let want = BoolMask::from_offdiag_fn(3, |i, j| j == i + 1);
        assert_eq!(t.support, want);
        assert_eq!(t.s, 4);
        let t = build_model(&ModelSpec::omega2(10)).unwrap();
        assert_eq!(t.s, 2 * (9 + 8 + 7 + 6));
    }

    #[test]
    fn random_sparse_condition_number_is_p() {
        for (p, seed) in [(10, 1), (30, 2), (30, 3)] {
            for spec in [ModelSpec::omega3(p, seed), ModelSpec::omega4(p, seed)] {
                let t = build_model(&spec).unwrap();
                let b = extreme_eigenvalues(&t.omega0, 1e-10).unwrap();
                let cond = b.condition_number();
                assert!(b.min_eig > 0.0);
                assert!((cond - p as f64).abs() / p as f64 <= 1e-6, "{}: {cond}", spec.name());
            }
        }
    }

    #[test]
    fn random_sparse_is_deterministic_in_seed() {
        let a = build_model(&ModelSpec::omega3(20, 7)).unwrap();
        let b = build_model(&ModelSpec::omega3(20, 7)).unwrap();
        let c = build_model(&ModelSpec::omega3(20, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.support, c.support);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(build_model(&ModelSpec::omega1(1)).is_err());
        let bad = ModelSpec {
            kind: ModelKind::Ar1 { rho: 1.0 },
            p: 3,
            seed: 0,
        };
        assert!(build_model(&bad).is_err());
        let bad = ModelSpec {
            kind: ModelKind::RandomSparse { alpha: 1.0 },
            p: 3,
            seed: 0,
        };
        assert!(build_model(&bad).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = build_model(&ModelSpec::omega1(4)).unwrap();
        let a = sample_mvn(&t, 20, 11).unwrap();
        let b = sample_mvn(&t, 20, 11).unwrap();
        let c = sample_mvn(&t, 20, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let one = sample_mvn(&t, 1, 11).unwrap();
        assert_eq!(one.n(), 1);
        assert!(crate::estimators::sample_covariance(&one).is_err());
    }

    #[test]
    fn identity_samples_have_identity_covariance() {
        let t = GroundTruth::from_pair(SymmetricMatrix::identity(3), SymmetricMatrix::identity(3));
        let x = sample_mvn(&t, 10_000, 5).unwrap();
        let s = crate::estimators::sample_covariance(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s.get(i, j) - want).abs() < 0.1);
            }
        }
    }
}
