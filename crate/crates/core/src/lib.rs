//! Sparse permutation-invariant estimation of Gaussian concentration matrices.
//!
//! The core estimator minimizes the negative Gaussian log-likelihood plus an
//! `l_q` penalty on the off-diagonal entries of the concentration matrix,
//! using a Cholesky parametrization that keeps every iterate positive
//! definite ([`solver`]). Around it sit the data-facing estimators
//! ([`estimators`]), the simulation models ([`simulation`]), scoring
//! ([`evaluation`]), tuning-parameter selection ([`tuning`]) and a plug-in
//! LDA classifier ([`classify`]).

pub mod classify;
pub mod data;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod linalg;
pub mod mask;
pub mod rng;
pub mod simulation;
pub mod solver;
pub mod tuning;

pub use data::DataMatrix;
pub use error::{Result, SpiceError};
pub use linalg::{CholeskyFactor, EigenBounds, SymmetricMatrix};
pub use mask::BoolMask;
pub use solver::{EstimateReport, InitStrategy, PenaltySpec, SolverConfig};
