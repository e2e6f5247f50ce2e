//! Covariance and concentration estimates built from data.

use crate::data::DataMatrix;
use crate::error::{Result, SpiceError};
use crate::linalg::SymmetricMatrix;
use crate::solver::{solve, EstimateReport, PenaltySpec, SolverConfig};

/// `Sigma = W Gamma W` with `W` the diagonal of standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleDecomposition {
    pub w_diag: Vec<f64>,
    pub gamma_hat: SymmetricMatrix,
}

/// Which matrix the penalized likelihood is fit to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpiceMode {
    /// Fit the correlation matrix, then rescale by the standard deviations.
    #[default]
    Correlation,
    /// Fit the covariance matrix directly.
    Covariance,
}

/// Sample covariance with divisor `n`.
pub fn sample_covariance(x: &DataMatrix) -> Result<SymmetricMatrix> {
    x.require_observations(2)?;
    Ok(second_moment(&x.centered()))
}

/// `X^T X / n` without centering; the caller decides what the rows are centered on.
pub fn second_moment(x: &DataMatrix) -> SymmetricMatrix {
    let p = x.p();
    let mut acc = vec![0.0; p * p];
    for row in x.rows() {
        for i in 0..p {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let dst = &mut acc[i * p..i * p + p];
            for j in i..p {
                dst[j] += xi * row[j];
            }
        }
    }
    let n = x.n().max(1) as f64;
    SymmetricMatrix::from_fn(p, |i, j| acc[i * p + j] / n)
}

pub fn scale_decompose(sigma_hat: &SymmetricMatrix) -> Result<ScaleDecomposition> {
    let diag = sigma_hat.diagonal();
    if let Some((column, &value)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(SpiceError::NonPositiveVariance { column, value });
    }
    let w_diag: Vec<f64> = diag.iter().map(|v| v.sqrt()).collect();
    let inv: Vec<f64> = w_diag.iter().map(|w| 1.0 / w).collect();
    let mut gamma_hat = sigma_hat.scale_both_sides(&inv)?;
    for i in 0..gamma_hat.dim() {
        gamma_hat.set(i, i, 1.0);
    }
    Ok(ScaleDecomposition { w_diag, gamma_hat })
}

/// Penalized likelihood fit to the sample covariance itself.
pub fn spice_covariance(sigma_hat: &SymmetricMatrix, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<EstimateReport> {
    solve(sigma_hat, pen, cfg)
}

/// Correlation-based fit together with its intermediate pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFit {
    pub scale: ScaleDecomposition,
    /// Fit on the sample correlation matrix.
    pub kappa: EstimateReport,
    /// `W^{-1} K W^{-1}`, with the zero pattern of `kappa`.
    pub omega: EstimateReport,
}

pub fn spice_correlation_fit(sigma_hat: &SymmetricMatrix, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<CorrelationFit> {
    let scale = scale_decompose(sigma_hat)?;
    let kappa = solve(&scale.gamma_hat, pen, cfg)?;
    let inv: Vec<f64> = scale.w_diag.iter().map(|w| 1.0 / w).collect();
    let omega = EstimateReport {
        omega_hat: kappa.omega_hat.scale_both_sides(&inv)?,
        ..kappa.clone()
    };
    Ok(CorrelationFit { scale, kappa, omega })
}

/// Correlation-based estimate of the concentration matrix from data.
pub fn spice_correlation(x: &DataMatrix, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<EstimateReport> {
    let sigma_hat = sample_covariance(x)?;
    Ok(spice_correlation_fit(&sigma_hat, pen, cfg)?.omega)
}

/// Dispatches on `mode` for a precomputed sample covariance.
pub fn spice_from_covariance(
    sigma_hat: &SymmetricMatrix,
    mode: SpiceMode,
    pen: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<EstimateReport> {
    match mode {
        SpiceMode::Correlation => Ok(spice_correlation_fit(sigma_hat, pen, cfg)?.omega),
        SpiceMode::Covariance => spice_covariance(sigma_hat, pen, cfg),
    }
}

/// Ledoit-Wolf shrinkage toward `mu I`, with the shrinkage intensity.
///
/// With `S` the sample covariance of the centered rows `x_k`, `mu = tr(S)/p`
/// and the normalized norm `<A, A> = tr(A A^T)/p`:
///
/// ```text
/// d^2    = <S - mu I, S - mu I>
/// bbar^2 = (1/n^2) sum_k <x_k x_k^T - S, x_k x_k^T - S>
/// b^2    = min(bbar^2, d^2)
/// rho    = b^2 / d^2
/// ```
///
/// and the estimate is `rho mu I + (1 - rho) S`.
pub fn ledoit_wolf_with_intensity(x: &DataMatrix) -> Result<(SymmetricMatrix, f64)> {
    let s = sample_covariance(x)?;
    let p = s.dim();
    let pf = p as f64;
    let n = x.n() as f64;
    let mu = s.trace() / pf;

    let s_norm2 = s.frobenius_norm().powi(2);
    let mut dev2 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let target = if i == j { mu } else { 0.0 };
            dev2 += (s.get(i, j) - target).powi(2);
        }
    }
    let d2 = dev2 / pf;
    if d2 == 0.0 {
        return Ok((s, 0.0));
    }
    // sum_k ||x_k x_k^T - S||^2 = sum_k ||x_k||^4 - n ||S||^2
    let centered = x.centered();
    let fourth: f64 = centered
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().powi(2))
        .sum();
    let bbar2 = ((fourth - n * s_norm2) / (n * n * pf)).max(0.0);
    let b2 = bbar2.min(d2);
    let rho = (b2 / d2).clamp(0.0, 1.0);

    let mut out = s.scaled(1.0 - rho);
    for i in 0..p {
        out.add_at(i, i, rho * mu);
    }
    Ok((out, rho))
}

pub fn ledoit_wolf(x: &DataMatrix) -> Result<SymmetricMatrix> {
    Ok(ledoit_wolf_with_intensity(x)?.0)
}

/// Diagonal matrix of column variances (divisor `n`).
pub fn naive_bayes_diagonal(x: &DataMatrix) -> Result<SymmetricMatrix> {
    x.require_observations(2)?;
    Ok(SymmetricMatrix::from_diagonal(&x.variances()))
}
