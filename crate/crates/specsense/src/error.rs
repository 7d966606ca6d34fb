//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by the analytic, optimization, and simulation layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input violated a documented precondition (negative time, probability
    /// out of range, mismatched slice lengths, malformed grid, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The transition matrix does not have a unique stationary distribution
    /// (e.g. the identity matrix, or a reducible/periodic chain).
    #[error("degenerate chain: stationary distribution is not unique")]
    DegenerateChain,

    /// No candidate satisfied the interference constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Every access duration satisfies the interference budget, so there is
    /// no finite constrained optimum; callers may substitute a cap.
    #[error(
        "interference budget {i_max} is not below the attainable supremum \
         {supremum}; any access duration satisfies it"
    )]
    UnboundedAccessDuration { i_max: f64, supremum: f64 },

    /// A numeric routine lost too much accuracy to trust its output.
    #[error("numeric failure: {0}")]
    NumericFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
