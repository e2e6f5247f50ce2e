//! Penalized Gaussian likelihood minimization over positive definite matrices.
//!
//! The objective is
//!
//! ```text
//! f(Omega) = tr(Omega S) - log det Omega + lambda * sum_{i != j} |omega_ij|^q
//! ```
//!
//! with `S` the sample covariance. `Omega` is parametrized as `T^T T` with `T`
//! lower triangular and a positive diagonal, so every iterate is positive
//! definite. Each outer iteration replaces `|u|^q` by the local quadratic
//! bound anchored at the previous `Omega` (with `|u0|` perturbed to
//! `|u0| + epsilon`) and minimizes the result by cyclical coordinate descent
//! over the entries of `T`. Every coordinate problem has a closed form: linear
//! for off-diagonal entries, and the positive root of `a u^2 + b u - 1 = 0`
//! for diagonal entries.
//!
//! A coordinate update and the matching refresh of `Omega` both cost `O(p)`,
//! so one sweep over the `p (p + 1) / 2` parameters is `O(p^3)`.
//!
//! Once entries of `Omega` approach zero their quadratic bounds become very
//! stiff, and because each entry of `Omega` depends on a whole column of `T`
//! the sweeps then barely move. The outer loop is therefore run only to a
//! loose tolerance and followed by column-wise coordinate descent on `f`
//! directly in `Omega` (see [`SolverConfig::refine`]), which converges to the
//! same minimizer and returns its exact zeros.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Result, SpiceError};
use crate::linalg::{cholesky_factor, inverse_pd, log_det_pd, CholeskyFactor, SymmetricMatrix};
use crate::mask::BoolMask;

/// Default perturbation added to `|omega0|` and used as the final zero threshold.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Penalty exponent, tuning parameter and perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub lambda: f64,
    pub q: f64,
    pub epsilon: f64,
}

impl PenaltySpec {
    pub fn new(lambda: f64, q: f64, epsilon: f64) -> Result<Self> {
        let pen = Self { lambda, q, epsilon };
        pen.validate()?;
        Ok(pen)
    }

    /// `q = 1` with the default perturbation.
    pub fn lasso(lambda: f64) -> Self {
        Self {
            lambda,
            q: 1.0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SpiceError::InvalidParameter(format!(
                "lambda must be a finite nonnegative number, got {}",
                self.lambda
            )));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(SpiceError::InvalidParameter(format!("q must be at least 1, got {}", self.q)));
        }
        if !(self.epsilon > 0.0) {
            return Err(SpiceError::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `lambda * sum_{i != j} |omega_ij|^q`.
    pub fn penalty(&self, omega: &SymmetricMatrix) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let p = omega.dim();
        let mut acc = 0.0;
        for i in 0..p {
            let row = omega.row(i);
            for &w in &row[(i + 1)..] {
                acc += if self.q == 1.0 { w.abs() } else { w.abs().powf(self.q) };
            }
        }
        2.0 * self.lambda * acc
    }

    /// Coefficient `lambda q (|u0| + epsilon)^(q - 2)` of the quadratic bound
    /// on `lambda |u|^q` anchored at `u0`.
    #[inline]
    fn quadratic_weight(&self, anchor: f64) -> f64 {
        let base = anchor.abs() + self.epsilon;
        let scale = self.lambda * self.q;
        if self.q == 1.0 {
            scale / base
        } else if self.q == 2.0 {
            scale
        } else {
            scale * base.powf(self.q - 2.0)
        }
    }
}

/// Starting point for `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// `inverse_sample` when the sample covariance has a Cholesky factor,
    /// `univariate_regression` otherwise.
    #[default]
    Auto,
    /// Factor of the inverse sample covariance.
    InverseSample,
    /// Each variable regressed on every earlier variable separately.
    UnivariateRegression,
    /// `t_jj = 1 / sqrt(s_jj)`, zero off the diagonal.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Inner loop stops when no entry of `T` moved more than this in a sweep.
    pub inner_tol: f64,
    /// Outer loop stops when the objective changes by less than this, relative.
    pub outer_tol: f64,
    pub max_inner_sweeps: usize,
    pub max_outer_iters: usize,
    pub init_strategy: InitStrategy,
    /// Finish with column-wise coordinate descent on the objective in
    /// `Omega`. The outer loop approaches the same minimizer, but its
    /// progress through `T` stalls once entries of `Omega` are near zero.
    pub refine: bool,
    /// Refinement stops when no entry of `Omega` moved by more than this
    /// times `max(1, max_i omega_ii)` during a pass.
    pub refine_tol: f64,
    pub max_refine_passes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-4,
            outer_tol: 1e-4,
            max_inner_sweeps: 10,
            max_outer_iters: 100,
            init_strategy: InitStrategy::Auto,
            refine: true,
            refine_tol: 1e-8,
            max_refine_passes: 1000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0) || !(self.outer_tol > 0.0) || !(self.refine_tol > 0.0) {
            return Err(SpiceError::InvalidParameter("solver tolerances must be positive".into()));
        }
        if self.max_inner_sweeps == 0 || self.max_outer_iters == 0 {
            return Err(SpiceError::InvalidParameter("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub omega_hat: SymmetricMatrix,
    /// Off-diagonal positions set to exactly zero by the final threshold.
    pub zero_pattern: BoolMask,
    /// Objective at the starting point, after every outer iteration, then
    /// after every refinement pass.
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub inner_sweeps: usize,
    pub refine_passes: usize,
    pub converged: bool,
}

impl EstimateReport {
    /// Objective at the last outer iteration.
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace always holds the starting value")
    }

    /// Off-diagonal nonzero ordered pairs.
    pub fn support(&self) -> BoolMask {
        self.zero_pattern.complement_offdiag()
    }

    pub fn nnz_offdiag(&self) -> usize {
        let p = self.omega_hat.dim();
        p * (p - 1) - self.zero_pattern.count_offdiag()
    }

    /// Largest increase between consecutive trace entries, relative to
    /// `1 + |f|` of the earlier entry. Nonpositive for a descending trace.
    pub fn worst_ascent(&self) -> f64 {
        self.objective_trace
            .windows(2)
            .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `tr(Omega S) - log det Omega + lambda sum_{i != j} |omega_ij|^q`.
pub fn objective_value(sigma_hat: &SymmetricMatrix, omega: &SymmetricMatrix, pen: &PenaltySpec) -> Result<f64> {
    let trace = omega.trace_product(sigma_hat)?;
    let log_det = log_det_pd(omega)?;
    Ok(trace - log_det + pen.penalty(omega))
}

fn check_variances(sigma_hat: &SymmetricMatrix) -> Result<()> {
    for (column, value) in sigma_hat.diagonal().into_iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(SpiceError::NonPositiveVariance { column, value });
        }
    }
    Ok(())
}

/// Starting factor `T0` with `Omega0 = T0^T T0`.
pub fn initialize_factor(sigma_hat: &SymmetricMatrix, strategy: InitStrategy) -> Result<CholeskyFactor> {
    check_variances(sigma_hat)?;
    let p = sigma_hat.dim();
    match strategy {
        InitStrategy::Auto => match cholesky_factor(sigma_hat) {
            Ok(l) => Ok(l.inverse()),
            Err(SpiceError::NotPositiveDefinite { .. }) => {
                initialize_factor(sigma_hat, InitStrategy::UnivariateRegression)
            }
            Err(e) => Err(e),
        },
        // S = L L^T  =>  S^{-1} = L^{-T} L^{-1}, so T = L^{-1}.
        InitStrategy::InverseSample => Ok(cholesky_factor(sigma_hat)?.inverse()),
        InitStrategy::UnivariateRegression => {
            let mut data = vec![0.0; p * p];
            for j in 0..p {
                let d = sigma_hat.get(j, j);
                let root = d.sqrt();
                for k in 0..j {
                    let phi = sigma_hat.get(j, k) / sigma_hat.get(k, k);
                    data[j * p + k] = -phi / root;
                }
                data[j * p + j] = 1.0 / root;
            }
            CholeskyFactor::from_row_major(p, data)
        }
        InitStrategy::Diagonal => {
            let diag: Vec<f64> = sigma_hat.diagonal().iter().map(|d| 1.0 / d.sqrt()).collect();
            CholeskyFactor::from_diagonal(&diag)
        }
    }
}

/// Mutable state of one solve.
///
/// `omega` is kept equal to `T^T T` by [`SolverState::update_omega_fast`];
/// `omega_prev` is the anchor of the current quadratic bound and only moves
/// in [`SolverState::refresh_anchor`]. Indices are zero-based; off-diagonal
/// parameters are `t[l][c]` with `c < l`.
#[derive(Debug, Clone)]
pub struct SolverState {
    t: CholeskyFactor,
    omega: SymmetricMatrix,
    omega_prev: SymmetricMatrix,
    pen: PenaltySpec,
    // lambda q (|omega_prev| + eps)^(q - 2), zero on the diagonal
    weights: SymmetricMatrix,
    pub objective_trace: Vec<f64>,
}

impl SolverState {
    pub fn new(t: CholeskyFactor, pen: PenaltySpec) -> Result<Self> {
        pen.validate()?;
        let omega = t.gram();
        let p = t.dim();
        let mut state = Self {
            t,
            omega_prev: omega.clone(),
            omega,
            pen,
            weights: SymmetricMatrix::zeros(p),
            objective_trace: Vec::new(),
        };
        state.refresh_weights();
        Ok(state)
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.t
    }

    pub fn omega(&self) -> &SymmetricMatrix {
        &self.omega
    }

    pub fn omega_prev(&self) -> &SymmetricMatrix {
        &self.omega_prev
    }

    /// Recomputes `Omega = T^T T` from scratch and makes it the new anchor.
    pub fn refresh_anchor(&mut self) {
        self.omega = self.t.gram();
        self.omega_prev = self.omega.clone();
        self.refresh_weights();
    }

    fn refresh_weights(&mut self) {
        let p = self.t.dim();
        if self.pen.lambda == 0.0 {
            self.weights = SymmetricMatrix::zeros(p);
            return;
        }
        let pen = self.pen;
        let anchor = &self.omega_prev;
        self.weights = SymmetricMatrix::from_fn(p, |i, j| {
            if i == j {
                0.0
            } else {
                pen.quadratic_weight(anchor.get(i, j))
            }
        });
    }

    /// Objective of the true penalty at the current `Omega`.
    pub fn objective(&self, sigma_hat: &SymmetricMatrix) -> Result<f64> {
        let trace = self.omega.trace_product(sigma_hat)?;
        Ok(trace - 2.0 * self.t.log_diag_sum() + self.pen.penalty(&self.omega))
    }

    fn check_index(&self, l: usize, c: usize) -> Result<()> {
        let dim = self.t.dim();
        if l >= dim || c > l {
            return Err(SpiceError::IndexOutOfRange { row: l, col: c, dim });
        }
        Ok(())
    }

    /// Sums over `k <= l, k != c` shared by both update rules:
    /// `(sum t_lk s_kc, sum t_lk^2 w_ck, sum (omega_ck - t_lc t_lk) t_lk w_ck)`.
    #[inline]
    fn coordinate_sums(&self, l: usize, c: usize, sigma_hat: &SymmetricMatrix) -> (f64, f64, f64) {
        let t_row = self.t.row(l);
        let s_row = &sigma_hat.row(c)[..=l];
        let o_row = &self.omega.row(c)[..=l];
        let w_row = &self.weights.row(c)[..=l];
        let t_lc = t_row[c];

        let mut linear = 0.0;
        let mut curvature = 0.0;
        let mut coupling = 0.0;
        for k in 0..=l {
            let t_lk = t_row[k];
            linear += t_lk * s_row[k];
            let wt = w_row[k] * t_lk;
            curvature += wt * t_lk;
            coupling += (o_row[k] - t_lc * t_lk) * wt;
        }
        // drop the k = c terms; w_cc = 0 so only the linear sum has one
        linear -= t_lc * s_row[c];
        (linear, curvature, coupling)
    }

    /// Closed-form minimizer over `t_lc`, `c < l`, of the current quadratic bound.
    pub fn update_offdiagonal(&self, l: usize, c: usize, sigma_hat: &SymmetricMatrix) -> Result<f64> {
        self.check_index(l, c)?;
        if l == c {
            return Err(SpiceError::IndexOutOfRange {
                row: l,
                col: c,
                dim: self.t.dim(),
            });
        }
        let (linear, curvature, coupling) = self.coordinate_sums(l, c, sigma_hat);
        Ok(-(linear + coupling) / (sigma_hat.get(c, c) + curvature))
    }

    /// Positive root of `a u^2 + b u - 1 = 0` for the diagonal entry `t_cc`.
    pub fn update_diagonal(&self, c: usize, sigma_hat: &SymmetricMatrix) -> Result<f64> {
        self.check_index(c, c)?;
        let s_cc = sigma_hat.get(c, c);
        if !(s_cc > 0.0) {
            return Err(SpiceError::NonPositiveVariance { column: c, value: s_cc });
        }
        let (linear, curvature, coupling) = self.coordinate_sums(c, c, sigma_hat);
        let a = s_cc + curvature;
        let b = linear + coupling;
        // (-b + sqrt(b^2 + 4a)) / (2a), rearranged to avoid cancellation when b > 0
        Ok(2.0 / (b + (b * b + 4.0 * a).sqrt()))
    }

    /// Writes `t_lc = t_new` and patches the affected entries of `Omega` in `O(p)`.
    pub fn update_omega_fast(&mut self, l: usize, c: usize, t_new: f64, t_old: f64) {
        let delta = t_new - t_old;
        if delta == 0.0 {
            return;
        }
        let p = self.t.dim();
        let t_row = self.t.row(l);
        let omega = self.omega.as_mut_slice();
        for (k, &t_lk) in t_row.iter().enumerate() {
            if k == c {
                continue;
            }
            let step = t_lk * delta;
            omega[c * p + k] += step;
            omega[k * p + c] += step;
        }
        omega[c * p + c] += t_new * t_new - t_old * t_old;
        self.t.set(l, c, t_new);
    }

    /// One pass over `c = 0..p`, `l = c..p`. Returns the largest change in `T`.
    pub fn sweep(&mut self, sigma_hat: &SymmetricMatrix) -> Result<f64> {
        let p = self.t.dim();
        let mut max_change = 0.0_f64;
        for c in 0..p {
            for l in c..p {
                let t_old = self.t.get(l, c);
                let t_new = if l == c {
                    self.update_diagonal(c, sigma_hat)?
                } else {
                    self.update_offdiagonal(l, c, sigma_hat)?
                };
                max_change = max_change.max((t_new - t_old).abs());
                self.update_omega_fast(l, c, t_new, t_old);
            }
        }
        Ok(max_change)
    }
}

/// Zeroes off-diagonal entries with magnitude below `epsilon`.
pub fn threshold_small_entries(omega: &SymmetricMatrix, epsilon: f64) -> (SymmetricMatrix, BoolMask) {
    let p = omega.dim();
    let mut out = omega.clone();
    let mut mask = BoolMask::new(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if omega.get(i, j).abs() < epsilon {
                out.set(i, j, 0.0);
                mask.set(i, j, true);
            }
        }
    }
    (out, mask)
}

/// Minimizes the penalized negative log-likelihood for `sigma_hat`.
///
/// Non-convergence is reported through `converged = false`, not as an error.
pub fn solve(sigma_hat: &SymmetricMatrix, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<EstimateReport> {
    pen.validate()?;
    cfg.validate()?;
    if !sigma_hat.is_finite() {
        return Err(SpiceError::InvalidParameter("sample covariance has non-finite entries".into()));
    }
    let t0 = initialize_factor(sigma_hat, cfg.init_strategy)?;
    solve_from(sigma_hat, pen, cfg, t0)
}

/// [`solve`] from a given starting factor.
pub fn solve_from(
    sigma_hat: &SymmetricMatrix,
    pen: &PenaltySpec,
    cfg: &SolverConfig,
    t0: CholeskyFactor,
) -> Result<EstimateReport> {
    let mut state = SolverState::new(t0, *pen)?;
    let mut f_prev = state.objective(sigma_hat)?;
    state.objective_trace.push(f_prev);

    let mut converged = false;
    let mut outer_iters = 0;
    let mut inner_sweeps = 0;
    let mut omega = state.omega().clone();
    while outer_iters < cfg.max_outer_iters {
        outer_iters += 1;
        for _ in 0..cfg.max_inner_sweeps {
            inner_sweeps += 1;
            if state.sweep(sigma_hat)? < cfg.inner_tol {
                break;
            }
        }
        state.refresh_anchor();
        let f = state.objective(sigma_hat)?;
        // The quadratic bounds majorize the smoothed penalty, not |u|^q, so
        // under a heavy penalty f itself can rise. Keep the last iterate
        // that lowered it and leave the rest to the refinement.
        if f > f_prev + DESCENT_SLACK * (1.0 + f_prev.abs()) {
            break;
        }
        state.objective_trace.push(f);
        omega.clone_from(state.omega());
        let rel_change = (f_prev - f).abs() / f_prev.abs().max(1.0);
        f_prev = f;
        if rel_change < cfg.outer_tol {
            converged = true;
            break;
        }
    }

    let mut refine_passes = 0;
    if cfg.refine && omega.dim() > 1 {
        // Under a heavy penalty the outer loop can leave Omega close to
        // singular; the diagonal start is then both lower and better conditioned.
        let diag = SymmetricMatrix::from_diagonal(&sigma_hat.diagonal().iter().map(|s| 1.0 / s).collect::<Vec<_>>());
        let f_diag = objective_value(sigma_hat, &diag, pen)?;
        let start = if f_diag < f_prev { diag } else { omega };
        let mut refiner = ColumnRefiner::new(sigma_hat, start, *pen)?;
        converged = false;
        while refine_passes < cfg.max_refine_passes {
            refine_passes += 1;
            let change = refiner.pass(cfg.refine_tol)?;
            state.objective_trace.push(refiner.objective()?);
            if change < cfg.refine_tol {
                converged = true;
                break;
            }
        }
        omega = refiner.omega;
    }

    let (omega_hat, zero_pattern) = threshold_small_entries(&omega, pen.epsilon);
    let report = EstimateReport {
        omega_hat,
        zero_pattern,
        objective_trace: state.objective_trace,
        outer_iters,
        inner_sweeps,
        refine_passes,
        converged,
    };
    // always on: a violation means a bug, not a hard problem instance
    SOLVES.fetch_add(1, Ordering::Relaxed);
    let ascent = report.worst_ascent();
    let violation = if ascent > DESCENT_SLACK {
        Some(format!("objective rose by {ascent:e} (relative)"))
    } else if cholesky_factor(&report.omega_hat).is_err() {
        Some("estimate is not positive definite".to_string())
    } else {
        None
    };
    if let Some(msg) = violation {
        VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        return Err(SpiceError::InvariantViolation(msg));
    }
    Ok(report)
}

static SOLVES: AtomicUsize = AtomicUsize::new(0);
static VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

/// Process-wide counts of completed solves and of those that broke the
/// descent or positive-definiteness check.
pub fn invariant_counters() -> (usize, usize) {
    (SOLVES.load(Ordering::Relaxed), VIOLATIONS.load(Ordering::Relaxed))
}

/// Largest tolerated rise of the objective between trace entries, relative
/// to `1 + |f|`.
pub const DESCENT_SLACK: f64 = 1e-9;

/// Exact minimizer over `u` of `a u^2 / 2 + r u + lambda |u|^q`, `a > 0`.
fn scalar_minimizer(a: f64, r: f64, lambda: f64, q: f64) -> f64 {
    let target = r.abs();
    // the root has the sign of -r; m = |u| solves a m + lambda q m^(q - 1) = |r|
    let m = if q == 1.0 {
        (target - lambda).max(0.0) / a
    } else if q == 2.0 {
        target / (a + 2.0 * lambda)
    } else {
        let phi = |m: f64| a * m + lambda * q * m.powf(q - 1.0) - target;
        let (mut lo, mut hi) = (0.0, target / a);
        while hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    -r.signum() * m
}

/// Column-by-column coordinate descent on the objective in `Omega` itself.
/// For column `j`, with `omega_jj` profiled out, the objective in the
/// off-diagonal part `beta` is
/// `s_jj beta^T Omega_{-j}^{-1} beta + 2 s_{-j,j}^T beta + 2 lambda sum |beta_k|^q`.
/// The penalty is separable here, so entries sitting at zero do not lock
/// their neighbours in place the way they do through the factor `T`. Every
/// update keeps `Omega` positive definite.
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

struct ColumnRefiner<'a> {
    sigma_hat: &'a SymmetricMatrix,
    pen: PenaltySpec,
    omega: SymmetricMatrix,
    // inverse of omega
    w: SymmetricMatrix,
    passes: usize,
}

impl<'a> ColumnRefiner<'a> {
    fn new(sigma_hat: &'a SymmetricMatrix, omega: SymmetricMatrix, pen: PenaltySpec) -> Result<Self> {
        let w = inverse_pd(&omega)?;
        Ok(Self {
            sigma_hat,
            pen,
            omega,
            w,
            passes: 0,
        })
    }

    fn objective(&self) -> Result<f64> {
        let trace = self.omega.trace_product(self.sigma_hat)?;
        Ok(trace - log_det_pd(&self.omega)? + self.pen.penalty(&self.omega))
    }

    /// One pass over all columns. Returns the largest entry change relative
    /// to `max(1, max_i omega_ii)`.
    fn pass(&mut self, tol: f64) -> Result<f64> {
        let p = self.omega.dim();
        let before = self.omega.clone();
        // column solves need not be much tighter than the pass criterion
        let column_tol = 100.0 * tol * self.omega.diagonal().into_iter().fold(1.0, f64::max);
        let mut beta = vec![0.0; p];
        let mut v = vec![0.0; p];
        let mut ub = vec![0.0; p];
        for j in 0..p {
            let s_jj = self.sigma_hat.get(j, j);
            // U = Omega_{-j}^{-1} = W_{-j} - w_j w_j^T / w_jj is never formed:
            // U beta = v - w_j c / w_jj with v = W beta and c = w_j^T beta.
            let w_jj = self.w.get(j, j);
            let w_j = self.w.row(j).to_vec();
            for k in 0..p {
                beta[k] = if k == j { 0.0 } else { self.omega.get(k, j) };
            }
            v.iter_mut().for_each(|x| *x = 0.0);
            let mut c = 0.0;
            for k in (0..p).filter(|&k| beta[k] != 0.0) {
                axpy(beta[k], self.w.row(k), &mut v);
                c += beta[k] * w_j[k];
            }
            for _ in 0..100 {
                let mut max_change = 0.0_f64;
                for k in 0..p {
                    if k == j {
                        continue;
                    }
                    let u_kk = self.w.get(k, k) - w_j[k] * w_j[k] / w_jj;
                    let ub_k = v[k] - w_j[k] * c / w_jj;
                    let a = 2.0 * s_jj * u_kk;
                    let r = 2.0 * (s_jj * (ub_k - u_kk * beta[k]) + self.sigma_hat.get(k, j));
                    let new = scalar_minimizer(a, r, 2.0 * self.pen.lambda, self.pen.q);
                    let delta = new - beta[k];
                    if delta != 0.0 {
                        axpy(delta, self.w.row(k), &mut v);
                        c += delta * w_j[k];
                        beta[k] = new;
                        max_change = max_change.max(delta.abs());
                    }
                }
                if max_change < column_tol {
                    break;
                }
            }
            for a in 0..p {
                ub[a] = if a == j { 0.0 } else { v[a] - w_j[a] * c / w_jj };
            }
            // profiled diagonal and the matching block inverse
            let quad: f64 = (0..p).map(|k| beta[k] * ub[k]).sum();
            for k in 0..p {
                if k != j {
                    self.omega.set(k, j, beta[k]);
                }
            }
            self.omega.set(j, j, quad + 1.0 / s_jj);
            // W <- U + s_jj ub ub^T off row j; row and column j are overwritten below
            for (a, w_a) in self.w.as_mut_slice().chunks_exact_mut(p).enumerate() {
                let f = w_j[a] / w_jj;
                let g = ub[a] * s_jj;
                for ((w_ab, w_bj), ub_b) in w_a.iter_mut().zip(&w_j).zip(&ub) {
                    *w_ab += g * ub_b - f * w_bj;
                }
            }
            for a in 0..p {
                self.w.set(a, j, -ub[a] * s_jj);
            }
            self.w.set(j, j, s_jj);
        }
        self.passes += 1;
        if self.passes % 10 == 0 {
            self.w = inverse_pd(&self.omega)?;
        }
        let scale = self.omega.diagonal().into_iter().fold(1.0, f64::max);
        let change = before
            .as_slice()
            .iter()
            .zip(self.omega.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(change / scale)
    }
}
