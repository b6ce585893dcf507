use thiserror::Error;

/// Errors produced by the recovery toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error(
        "SVD did not converge after {sweeps} sweeps \
         (relative off-diagonal mass {off_diagonal:.3e}, largest entry {max_abs:.3e})"
    )]
    SvdNoConvergence {
        sweeps: usize,
        off_diagonal: f64,
        max_abs: f64,
    },

    #[error("{param} out of domain: {message}")]
    OutOfDomain { param: &'static str, message: String },

    #[error("vector is not a member of T(alpha, k): {reason}")]
    NotInPolytope { reason: String },

    #[error("problem size exceeds supported cap: {message}")]
    SizeCap { message: String },

    #[error("ground truth required for {context}")]
    MissingTruth { context: &'static str },

    #[error("solver diverged: {context}")]
    Diverged { context: &'static str },

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub fn out_of_domain(param: &'static str, message: impl Into<String>) -> Self {
        Error::OutOfDomain {
            param,
            message: message.into(),
        }
    }
}
