use crate::error::{Result, SpiceError};

/// `n x p` observation matrix, row-major.
///
/// `column_means` is filled in by [`DataMatrix::centered`] and `column_sds`
/// by [`DataMatrix::standardized`]; both keep the statistics of the data they
/// were computed from so estimates can be mapped back to the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    pub column_means: Option<Vec<f64>>,
    pub column_sds: Option<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(SpiceError::InvalidParameter("data must have at least one column".into()));
        }
        if values.len() != n * p {
            return Err(SpiceError::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        Ok(Self {
            n,
            p,
            values,
            column_means: None,
            column_sds: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(SpiceError::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), p, values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.p];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Column variances with divisor `n`.
    pub fn variances(&self) -> Vec<f64> {
        let mean = self.means();
        let mut var = vec![0.0; self.p];
        for row in self.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let n = self.n.max(1) as f64;
        var.iter_mut().for_each(|v| *v /= n);
        var
    }

    /// Subtracts column means, recording them in `column_means`.
    pub fn centered(&self) -> Self {
        let mean = self.means();
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(self.p) {
            for (x, m) in row.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        out.column_means = Some(mean);
        out
    }

    /// Centers and scales every column to unit variance (divisor `n`).
    pub fn standardized(&self) -> Result<Self> {
        let sds: Vec<f64> = self.variances().into_iter().map(f64::sqrt).collect();
        if let Some((column, &value)) = sds.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
            return Err(SpiceError::NonPositiveVariance {
                column,
                value: value * value,
            });
        }
        let mut out = self.centered();
        for row in out.values.chunks_exact_mut(self.p) {
            for (x, s) in row.iter_mut().zip(&sds) {
                *x /= s;
            }
        }
        out.column_sds = Some(sds);
        Ok(out)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self::new(idx.len(), self.p, values).expect("row selection keeps the shape consistent")
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.p) {
            return Err(SpiceError::IndexOutOfRange {
                row: 0,
                col: bad,
                dim: self.p,
            });
        }
        let mut values = Vec::with_capacity(self.n * idx.len());
        for row in self.rows() {
            values.extend(idx.iter().map(|&j| row[j]));
        }
        Self::new(self.n, idx.len(), values)
    }

    pub fn require_observations(&self, required: usize) -> Result<()> {
        if self.n < required {
            return Err(SpiceError::TooFewObservations {
                required,
                found: self.n,
            });
        }
        Ok(())
    }
}
