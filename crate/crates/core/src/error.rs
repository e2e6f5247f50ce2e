use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpiceError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("non-positive variance {value} in column {column}")]
    NonPositiveVariance { column: usize, value: f64 },

    #[error("iteration did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("need at least {required} observations, found {found}")]
    TooFewObservations { required: usize, found: usize },

    #[error("need at least {required} values, found {found}")]
    TooFewValues { required: usize, found: usize },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no class-{0} observations in training data")]
    MissingClass(u8),

    #[error("class {class} has {available} observations, {requested} requested")]
    InsufficientClassCount {
        class: u8,
        requested: usize,
        available: usize,
    },

    #[error("class labels are required for the classification-error criterion")]
    MissingLabels,

    #[error("solver invariant violated: {0}")]
    InvariantViolation(String),

    #[error("every fit on the lambda grid failed")]
    AllFitsFailed,
}

pub type Result<T> = std::result::Result<T, SpiceError>;
