use thiserror::Error;

/// Failures reported by the library. Every constructor or operation that
/// validates its input reports through this type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    /// The supplied signal images do not preserve inner products, so no
    /// unitary interaction can produce them.
    #[error("map does not preserve inner products (residual {0:e})")]
    NotIsometric(f64),

    /// Raw parameter vectors were too close to linearly dependent to
    /// orthonormalize; the caller should draw fresh parameters.
    #[error("raw vectors are nearly linearly dependent; resample")]
    Degenerate,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
