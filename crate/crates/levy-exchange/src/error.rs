//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by pricers, samplers and calibration routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of the operation.
    /// The message names the violated bound.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition (matching parameters, dimensions, ...)
    /// does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Intermediate quantities exceeded floating-point range.
    #[error("overflow in {context} at term {term_index}")]
    Overflow {
        context: &'static str,
        term_index: usize,
    },

    /// An iterative numerical scheme failed to converge; `detail` reports
    /// node counts or partial results.
    #[error("numerical error in {context}: {detail}")]
    Numerical {
        context: &'static str,
        detail: String,
    },

    /// A parameter-matching problem has no solution; `residual` quantifies
    /// the mismatch.
    #[error("constraint not satisfiable in {context} (residual {residual:e})")]
    Constraint { context: &'static str, residual: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
