use crate::error::{Result, SpiceError};

/// Symmetric boolean `p x p` mask over matrix positions.
///
/// Used both for supports (true = nonzero) and zero patterns (true = zero);
/// the owning type says which.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoolMask {
    dim: usize,
    data: Vec<bool>,
}

impl BoolMask {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: vec![false; dim * dim],
        }
    }

    /// Evaluates `f` on the strict upper triangle and mirrors it; the diagonal stays false.
    pub fn from_offdiag_fn(dim: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    /// Number of true off-diagonal ordered pairs.
    pub fn count_offdiag(&self) -> usize {
        let mut n = 0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && self.get(i, j) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Off-diagonal complement, diagonal false.
    pub fn complement_offdiag(&self) -> Self {
        Self::from_offdiag_fn(self.dim, |i, j| !self.get(i, j))
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(SpiceError::DimensionMismatch {
                expected: self.dim,
                found: perm.len(),
            });
        }
        let mut out = Self::new(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i * self.dim + j] = self.get(perm[i], perm[j]);
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn diagonal_is_clear(&self) -> bool {
        (0..self.dim).all(|i| !self.get(i, i))
    }
}
