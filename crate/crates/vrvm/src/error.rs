//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by kernel construction, variational updates, data
/// handling, and model persistence.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid user-supplied configuration or data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed data file (row numbers are 1-based data rows).
    #[error("data error: {0}")]
    Data(String),

    /// Linear-algebra or floating-point failure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A quantity violated an invariant that the update equations
    /// guarantee in exact arithmetic; indicates a caller or update bug.
    #[error("internal consistency: {0}")]
    Inconsistency(String),

    /// Numerical failure in the middle of a fit; carries the bound
    /// trajectory recorded up to the failpoint.
    #[error("fit failed after {} sweeps: {what}", trace.len())]
    FitFailed { what: String, trace: Vec<f64> },

    /// Unreadable or unsupported model file.
    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Prepend a location note (e.g. which CV fold failed) while keeping
    /// the variant, so exit-code mapping still sees the original kind.
    pub fn with_context(self, ctx: &str) -> Error {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Dimension(m) => Error::Dimension(format!("{ctx}: {m}")),
            Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Inconsistency(m) => Error::Inconsistency(format!("{ctx}: {m}")),
            Error::FitFailed { what, trace } => {
                Error::FitFailed { what: format!("{ctx}: {what}"), trace }
            }
            Error::ModelFormat(m) => Error::ModelFormat(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Io(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
