use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input lengths or layouts disagree with the design.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The fitted model is degenerate (for example zero residual variance),
    /// so the likelihood is unbounded.
    #[error("degenerate fit: {0}")]
    Degenerate(String),

    /// An iterative method did not converge; carries the objective at the
    /// best iterate found.
    #[error("numeric failure: {message} (best objective {best_objective})")]
    Numeric {
        message: String,
        best_objective: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
