use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("SVD did not converge after {sweeps} sweeps")]
    NumericalFailure { sweeps: usize },

    #[error("key does not span R^{d} (rank {rank})")]
    NotAFrame { d: usize, rank: usize },

    #[error("search too large: {0}")]
    SearchTooLarge(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("operation requires n = 2 rows, got n = {0}")]
    UnsupportedN(usize),

    #[error("input is not in the range of the encoder (residual {residual:e})")]
    NotInRange { residual: f64 },

    #[error("ambiguous recovery: two distinct orbits reproduce the measurements")]
    AmbiguityDetected,

    #[error("key is not phase retrievable (violating partition {witness:?})")]
    NotPhaseRetrievable { witness: Vec<usize> },

    #[error("achievement check failed: {clause} (lhs {lhs:e}, rhs {rhs:e})")]
    AchievementFailure {
        clause: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("Lipschitz sandwich violated on the {side} side: ratio {ratio:e} outside [{lower:e}, {upper:e}]")]
    LipschitzViolation {
        side: &'static str,
        ratio: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
