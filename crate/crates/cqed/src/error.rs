//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CqedError {
    /// Operands live on different tensor spaces.
    #[error("tensor space mismatch: {0}")]
    SpaceMismatch(String),

    /// A dimension or index argument is out of range.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// An argument fails a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative or truncated computation failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The adaptive integrator could not meet the tolerance.
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    /// A state or evolution invariant was violated (norm, trace, positivity).
    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, CqedError>;
