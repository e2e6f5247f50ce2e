//! Dense symmetric and triangular matrix primitives.
//!
//! Everything is stored row-major in a flat `Vec<f64>`. The solver touches
//! rows of the covariance, the concentration estimate and the Cholesky factor
//! in its innermost loop, so rows are exposed as contiguous slices.

use crate::error::{Result, SpiceError};

/// Relative pivot floor used by [`cholesky_factor`]: a pivot at or below
/// `PIVOT_RTOL * max(diag)` is treated as a loss of positive definiteness.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Default tolerance for [`extreme_eigenvalues`].
pub const EIGEN_TOL: f64 = 1e-8;

/// Dense `p x p` symmetric matrix.
///
/// Both triangles are stored; every mutator writes the mirrored entry too, so
/// `get(i, j) == get(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from row-major storage. Entries must agree with their
    /// mirror to within `1e-12` relative; the stored matrix is the average of
    /// the two triangles.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(SpiceError::InvalidParameter("dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(SpiceError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        let scale = data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
        let mut m = Self { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = m.data[i * dim + j];
                let b = m.data[j * dim + i];
                if !((a - b).abs() <= 1e-12 * scale) {
                    return Err(SpiceError::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(SpiceError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `value` at `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, delta: f64) {
        self.data[i * self.dim + j] += delta;
        if i != j {
            self.data[j * self.dim + i] += delta;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `D m D` for `D = diag(scale)`.
    pub fn scale_both_sides(&self, scale: &[f64]) -> Result<Self> {
        self.check_len(scale.len())?;
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i * self.dim + j] = self.get(i, j) * (scale[i] * scale[j]);
            }
        }
        Ok(out)
    }

    /// Returns `P m P^T` where `(P m P^T)(i, j) = m(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        self.check_len(perm.len())?;
        Ok(Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j])))
    }

    /// `tr(self * other)`; for symmetric arguments this is the entrywise inner product.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        self.check_len(other.dim)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `x^T m y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(y.len())?;
        let my = self.mul_vec(y)?;
        Ok(x.iter().zip(&my).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute off-diagonal entry; `0` for `p = 1`.
    pub fn max_abs_offdiag(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                best = best.max(self.get(i, j).abs());
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(SpiceError::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

/// Dense lower-triangular factor with a strictly positive diagonal.
///
/// Used in two roles: the Cholesky factor `L` of a positive definite matrix
/// (`m = L L^T`, see [`CholeskyFactor::lower_product`]) and the solver's
/// parametrization `Omega = T^T T` (see [`CholeskyFactor::gram`]).
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim]).expect("unit diagonal is positive")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            data[i * dim + i] = d;
        }
        Self::from_row_major(dim, data)
    }

    /// Validates lower-triangularity and a strictly positive diagonal.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(SpiceError::InvalidParameter("dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(SpiceError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        for i in 0..dim {
            let d = data[i * dim + i];
            if !(d > 0.0) {
                return Err(SpiceError::NotPositiveDefinite { index: i, pivot: d });
            }
            if data[i * dim + i + 1..(i + 1) * dim].iter().any(|&v| v != 0.0) {
                return Err(SpiceError::InvalidParameter(format!(
                    "entries above the diagonal in row {i} must be zero"
                )));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(SpiceError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row `i` up to and including the diagonal.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..i * self.dim + i + 1]
    }

    /// Overwrites entry `(i, j)` with `j <= i`. Diagonal writes must be positive.
    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(j <= i);
        debug_assert!(i != j || value > 0.0);
        self.data[i * self.dim + j] = value;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    /// `T^T T`.
    pub fn gram(&self) -> SymmetricMatrix {
        let p = self.dim;
        let mut out = SymmetricMatrix::zeros(p);
        // (T^T T)_ij = sum_{k >= max(i, j)} t_ki t_kj
        for k in 0..p {
            let row = self.row(k);
            for i in 0..=k {
                let tki = row[i];
                if tki == 0.0 {
                    continue;
                }
                for j in i..=k {
                    out.data[i * p + j] += tki * row[j];
                }
            }
        }
        for i in 0..p {
            for j in (i + 1)..p {
                out.data[j * p + i] = out.data[i * p + j];
            }
        }
        out
    }

    /// `L L^T`.
    pub fn lower_product(&self) -> SymmetricMatrix {
        let p = self.dim;
        SymmetricMatrix::from_fn(p, |i, j| {
            let (ri, rj) = (self.row(i), self.row(j));
            ri.iter().zip(rj).map(|(a, b)| a * b).sum()
        })
    }

    /// `sum_j log l_jj`, i.e. half the log-determinant of either product.
    pub fn log_diag_sum(&self) -> f64 {
        (0..self.dim).map(|j| self.get(j, j).ln()).sum()
    }

    /// `L^{-1}`, again lower triangular with positive diagonal.
    pub fn inverse(&self) -> CholeskyFactor {
        let p = self.dim;
        // forward substitution, one column of the identity at a time
        let mut inv = vec![0.0; p * p];
        for col in 0..p {
            for i in col..p {
                let mut acc = if i == col { 1.0 } else { 0.0 };
                let row = self.row(i);
                for k in col..i {
                    acc -= row[k] * inv[k * p + col];
                }
                inv[i * p + col] = acc / row[i];
            }
        }
        CholeskyFactor { dim: p, data: inv }
    }

    /// `(L L^T)^{-1} = L^{-T} L^{-1}`.
    pub fn inverse_of_lower_product(&self) -> SymmetricMatrix {
        self.inverse().gram()
    }
}

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBounds {
    pub min_eig: f64,
    pub max_eig: f64,
}

impl EigenBounds {
    /// Spectral norm of the symmetric matrix the bounds came from.
    pub fn operator_norm(&self) -> f64 {
        self.min_eig.abs().max(self.max_eig.abs())
    }

    pub fn condition_number(&self) -> f64 {
        self.max_eig / self.min_eig
    }
}

/// Lower-triangular `L` with `m = L L^T`.
pub fn cholesky_factor(m: &SymmetricMatrix) -> Result<CholeskyFactor> {
    let p = m.dim();
    let max_diag = m.diagonal().into_iter().fold(0.0_f64, f64::max);
    let floor = PIVOT_RTOL * max_diag;
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l[j * p + k] * l[j * p + k];
        }
        if !(pivot > floor) || pivot <= 0.0 {
            return Err(SpiceError::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[j * p + j] = d;
        for i in (j + 1)..p {
            let mut acc = m.get(i, j);
            for k in 0..j {
                acc -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = acc / d;
        }
    }
    Ok(CholeskyFactor { dim: p, data: l })
}

/// `log det m` as `2 sum_j log l_jj` from the Cholesky factor.
pub fn log_det_pd(m: &SymmetricMatrix) -> Result<f64> {
    Ok(2.0 * cholesky_factor(m)?.log_diag_sum())
}

/// Inverse of a positive definite matrix via its Cholesky factor.
pub fn inverse_pd(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(cholesky_factor(m)?.inverse_of_lower_product())
}

/// Smallest and largest eigenvalue by shifted power iteration.
///
/// The largest eigenvalue comes from power iteration on `m + r I` with `r` a
/// Gershgorin bound, so the shifted spectrum is nonnegative; the smallest from
/// power iteration on `max_eig I - m`. Each run stops once the residual
/// `||A v - theta v||` drops below `tol`, which places an eigenvalue within
/// `tol` of the Rayleigh quotient.
pub fn extreme_eigenvalues(m: &SymmetricMatrix, tol: f64) -> Result<EigenBounds> {
    if !(tol > 0.0) {
        return Err(SpiceError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let p = m.dim();
    if p == 1 {
        let v = m.get(0, 0);
        return Ok(EigenBounds { min_eig: v, max_eig: v });
    }
    let radius = (0..p)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if radius == 0.0 {
        return Ok(EigenBounds { min_eig: 0.0, max_eig: 0.0 });
    }
    let cap = 10 * p * 100;

    // A = m + r I
    let top = dominant_eigenvalue(p, |x, out| shifted_apply(m, 1.0, radius, x, out), tol, cap)?;
    let max_eig = top - radius;
    // A = max_eig I - m
    let spread = dominant_eigenvalue(p, |x, out| shifted_apply(m, -1.0, max_eig, x, out), tol, cap)?;
    let min_eig = (max_eig - spread).min(max_eig);
    Ok(EigenBounds { min_eig, max_eig })
}

/// `out = sign * m x + shift * x`.
fn shifted_apply(m: &SymmetricMatrix, sign: f64, shift: f64, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mx: f64 = m.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        *o = sign * mx + shift * x[i];
    }
}

fn dominant_eigenvalue(
    p: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    tol: f64,
    cap: usize,
) -> Result<f64> {
    // Deterministic start vector with no exact symmetry, so it is not
    // orthogonal to the dominant eigenvector of structured inputs.
    let mut v: Vec<f64> = (0..p)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    normalize(&mut v);
    let mut w = vec![0.0; p];
    for _ in 0..cap {
        apply(&v, &mut w);
        let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (b - theta * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * theta.abs().max(1.0) {
            return Ok(theta);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Shifted operator annihilated v: dominant eigenvalue is zero.
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    Err(SpiceError::ConvergenceFailure { iterations: cap })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// `||a - b||_F`.
pub fn frobenius_distance(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SpiceError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<f64> {
    Ok(frobenius_distance(a, b)? / b.frobenius_norm())
}
