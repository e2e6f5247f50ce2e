//! Scoring estimates against a known truth.

use crate::error::{Result, SpiceError};
use crate::linalg::{log_det_pd, SymmetricMatrix};
use crate::mask::BoolMask;

/// Recovery of the off-diagonal sparsity pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityConfusion {
    /// Percentage of true nonzeros estimated nonzero; `None` when the truth has none.
    pub tp_pct: Option<f64>,
    /// Percentage of true zeros estimated zero; `None` when the truth has none.
    pub tn_pct: Option<f64>,
    pub true_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub false_pos: usize,
}

/// Mean and standard error over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationSummary {
    pub mean: f64,
    pub se: f64,
    pub n_reps: usize,
}

/// `tr(Sigma Omega_hat) - log det Sigma - log det Omega_hat - p`.
pub fn kl_loss(sigma_true: &SymmetricMatrix, omega_hat: &SymmetricMatrix) -> Result<f64> {
    let trace = sigma_true.trace_product(omega_hat)?;
    Ok(trace - log_det_pd(sigma_true)? - log_det_pd(omega_hat)? - sigma_true.dim() as f64)
}

/// Counts over off-diagonal ordered pairs; masks mark nonzeros.
pub fn sparsity_confusion(truth_support: &BoolMask, est_support: &BoolMask) -> Result<SparsityConfusion> {
    let p = truth_support.dim();
    if est_support.dim() != p {
        return Err(SpiceError::DimensionMismatch {
            expected: p,
            found: est_support.dim(),
        });
    }
    let (mut tp, mut fneg, mut tn, mut fpos) = (0, 0, 0, 0);
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            match (truth_support.get(i, j), est_support.get(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fneg += 1,
                (false, false) => tn += 1,
                (false, true) => fpos += 1,
            }
        }
    }
    let pct = |hit: usize, miss: usize| (hit + miss > 0).then(|| 100.0 * hit as f64 / (hit + miss) as f64);
    Ok(SparsityConfusion {
        tp_pct: pct(tp, fneg),
        tn_pct: pct(tn, fpos),
        true_pos: tp,
        false_neg: fneg,
        true_neg: tn,
        false_pos: fpos,
    })
}

/// Per-position count of masks flagging a zero; diagonal reported as 0.
pub fn zero_pattern_counts(masks: &[BoolMask]) -> Result<Vec<Vec<usize>>> {
    let Some(first) = masks.first() else {
        return Ok(Vec::new());
    };
    let p = first.dim();
    let mut counts = vec![vec![0usize; p]; p];
    for m in masks {
        if m.dim() != p {
            return Err(SpiceError::DimensionMismatch {
                expected: p,
                found: m.dim(),
            });
        }
        for (i, row) in counts.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                if i != j && m.get(i, j) {
                    *c += 1;
                }
            }
        }
    }
    Ok(counts)
}

/// Mean and `sd / sqrt(n)` with the `n - 1` divisor for the sd.
pub fn summarize(values: &[f64]) -> Result<ReplicationSummary> {
    let n = values.len();
    if n < 2 {
        return Err(SpiceError::TooFewValues { required: 2, found: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(ReplicationSummary {
        mean,
        se: (var / n as f64).sqrt(),
        n_reps: n,
    })
}
