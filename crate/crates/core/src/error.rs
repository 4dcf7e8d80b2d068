use thiserror::Error;

/// Errors produced by the solvers and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("{what} overflows for argument {argument}")]
    Overflow { what: &'static str, argument: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("stability condition violated: {0}")]
    Stability(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("singular linear system ({0})")]
    Singular(String),

    #[error("mass conservation violated: relative drift {0:e}")]
    MassDrift(f64),

    #[error("negative density {value:e} at node {node}")]
    NegativeDensity { node: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
