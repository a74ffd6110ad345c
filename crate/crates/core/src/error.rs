use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A size parameter falls outside the supported range.
    #[error("{what} = {value} is out of range (allowed {min}..={max})")]
    Bounds {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    /// A mathematical precondition does not hold.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vectors or operators of incompatible shape were combined.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The Fock truncation or Jacobi section is too small for an exact result.
    #[error("truncation error: {what} needs at least {required}, have {available}")]
    Truncation {
        what: &'static str,
        required: usize,
        available: usize,
    },

    /// The Hankel moment matrix stops being positive definite at `order`.
    #[error("degenerate moment sequence: Hankel matrix is not positive definite at order {order} (pivot {pivot:e})")]
    Degenerate { order: usize, pivot: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("statistical check failed: {0}")]
    Statistical(String),

    #[error("invalid document: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
