//! Two-class linear discriminant analysis with a plug-in concentration matrix.

use rand::seq::SliceRandom;

use crate::data::DataMatrix;
use crate::error::{Result, SpiceError};
use crate::linalg::SymmetricMatrix;
use crate::rng::rng_from_seed;

/// Observations with labels in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub x: DataMatrix,
    pub labels: Vec<u8>,
}

impl LabeledData {
    pub fn new(x: DataMatrix, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != x.n() {
            return Err(SpiceError::DimensionMismatch {
                expected: x.n(),
                found: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(SpiceError::InvalidParameter(format!("labels must be 0 or 1, found {bad}")));
        }
        Ok(Self { x, labels })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn p(&self) -> usize {
        self.x.p()
    }

    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == class).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        Ok(Self {
            x: self.x.select_columns(idx)?,
            labels: self.labels.clone(),
        })
    }

    /// Per-class column means; `None` for an empty class.
    pub fn class_means(&self) -> [Option<Vec<f64>>; 2] {
        [0u8, 1].map(|c| {
            let idx = self.class_indices(c);
            (!idx.is_empty()).then(|| self.x.select_rows(&idx).means())
        })
    }

    /// Rows with their class mean subtracted, as used for the pooled
    /// within-class covariance.
    pub fn within_class_centered(&self) -> DataMatrix {
        let means = self.class_means();
        self.centered_on(&means)
    }

    /// Rows centered on externally supplied class means.
    pub fn centered_on(&self, means: &[Option<Vec<f64>>; 2]) -> DataMatrix {
        let p = self.p();
        let mut values = Vec::with_capacity(self.n() * p);
        for (row, &label) in self.x.rows().zip(&self.labels) {
            match &means[label as usize] {
                Some(m) => values.extend(row.iter().zip(m).map(|(v, c)| v - c)),
                None => values.extend_from_slice(row),
            }
        }
        DataMatrix::new(self.n(), p, values).expect("shape unchanged")
    }
}

/// Indices of the `p_keep` columns with the largest absolute pooled-variance
/// two-sample t-statistic, descending, ties broken by column index.
pub fn t_statistic_ranking(data: &LabeledData, p_keep: usize) -> Result<Vec<usize>> {
    if let Some(&count) = data.class_counts().iter().find(|&&c| c < 2) {
        return Err(SpiceError::TooFewObservations {
            required: 2,
            found: count,
        });
    }
    if p_keep > data.p() {
        return Err(SpiceError::InvalidParameter(format!(
            "cannot keep {p_keep} of {} features",
            data.p()
        )));
    }
    let stats = t_statistics(data);
    let mut order: Vec<usize> = (0..data.p()).collect();
    order.sort_by(|&a, &b| stats[b].abs().total_cmp(&stats[a].abs()).then(a.cmp(&b)));
    order.truncate(p_keep);
    Ok(order)
}

/// Pooled-variance two-sample t-statistics, class 1 minus class 0.
pub fn t_statistics(data: &LabeledData) -> Vec<f64> {
    let [n0, n1] = data.class_counts().map(|c| c as f64);
    let groups = [0u8, 1].map(|c| data.x.select_rows(&data.class_indices(c)));
    let (m0, m1) = (groups[0].means(), groups[1].means());
    // variances() uses divisor n; convert to sums of squares
    let (v0, v1) = (groups[0].variances(), groups[1].variances());
    (0..data.p())
        .map(|j| {
            let diff = m1[j] - m0[j];
            let pooled = (n0 * v0[j] + n1 * v1[j]) / (n0 + n1 - 2.0);
            let se = (pooled * (1.0 / n0 + 1.0 / n1)).sqrt();
            if diff == 0.0 {
                0.0
            } else if se == 0.0 {
                diff.signum() * f64::INFINITY
            } else {
                diff / se
            }
        })
        .collect()
}

/// Fitted discriminant rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub omega_hat: SymmetricMatrix,
    pub mu: [Vec<f64>; 2],
    pub log_prior: [f64; 2],
    omega_mu: [Vec<f64>; 2],
    offset: [f64; 2],
}

impl LdaModel {
    /// `x^T Omega mu_k - mu_k^T Omega mu_k / 2 + log pi_k`.
    pub fn discriminant(&self, x: &[f64], class: u8) -> Result<f64> {
        let k = class as usize;
        if x.len() != self.omega_hat.dim() {
            return Err(SpiceError::DimensionMismatch {
                expected: self.omega_hat.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter().zip(&self.omega_mu[k]).map(|(a, b)| a * b).sum::<f64>() + self.offset[k])
    }
}

pub fn fit_lda(train: &LabeledData, omega_hat: &SymmetricMatrix) -> Result<LdaModel> {
    if omega_hat.dim() != train.p() {
        return Err(SpiceError::DimensionMismatch {
            expected: train.p(),
            found: omega_hat.dim(),
        });
    }
    let counts = train.class_counts();
    let [m0, m1] = train.class_means();
    let m0 = m0.ok_or(SpiceError::MissingClass(0))?;
    let m1 = m1.ok_or(SpiceError::MissingClass(1))?;
    let n = train.n() as f64;
    let log_prior = counts.map(|c| (c as f64 / n).ln());
    let mu = [m0, m1];
    let omega_mu = [omega_hat.mul_vec(&mu[0])?, omega_hat.mul_vec(&mu[1])?];
    let offset = [0, 1].map(|k| {
        let quad: f64 = mu[k].iter().zip(&omega_mu[k]).map(|(a, b)| a * b).sum();
        -0.5 * quad + log_prior[k]
    });
    Ok(LdaModel {
        omega_hat: omega_hat.clone(),
        mu,
        log_prior,
        omega_mu,
        offset,
    })
}

/// Class with the larger discriminant; exact ties go to class 0.
pub fn lda_classify(model: &LdaModel, x: &[f64]) -> Result<u8> {
    let d0 = model.discriminant(x, 0)?;
    let d1 = model.discriminant(x, 1)?;
    Ok(u8::from(d1 > d0))
}

/// Fraction of misclassified rows.
pub fn error_rate(model: &LdaModel, test: &LabeledData) -> Result<f64> {
    if test.n() == 0 {
        return Ok(0.0);
    }
    let mut wrong = 0usize;
    for (row, &label) in test.x.rows().zip(&test.labels) {
        if lda_classify(model, row)? != label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test.n() as f64)
}

/// Random split with `n_train_per_class[c]` training rows from class `c`.
/// Both halves keep the original row order.
pub fn stratified_split(
    data: &LabeledData,
    n_train_per_class: [usize; 2],
    seed: u64,
) -> Result<(LabeledData, LabeledData)> {
    let mut rng = rng_from_seed(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx = data.class_indices(class);
        let requested = n_train_per_class[class as usize];
        if requested > idx.len() {
            return Err(SpiceError::InsufficientClassCount {
                class,
                requested,
                available: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..requested]);
        test.extend_from_slice(&idx[requested..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select_rows(&train), data.select_rows(&test)))
}
