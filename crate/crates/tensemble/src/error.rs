use thiserror::Error;

/// Errors reported by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input collection (samples, pool columns, clusterings) was empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Two inputs that must agree in shape do not.
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A matrix that must be square is not.
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// A matrix that must be symmetric deviates beyond tolerance.
    #[error("matrix is not symmetric: max |S - S^T| = {max_dev:e} exceeds {tol:e}")]
    NotSymmetric { max_dev: f64, tol: f64 },

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An input value is NaN or infinite where finite data is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A coherent-link mask marks a pair the similarity matrix does not fully support.
    #[error("link mask entry ({row},{col}) is set but similarity is {value}, not 1")]
    UnsupportedLink { row: usize, col: usize, value: f64 },

    /// A dense linear-algebra routine (SVD, eigendecomposition) failed to converge.
    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    /// An internal numerical consistency check failed, e.g. a nominally real
    /// result came back with a large imaginary residue.
    #[error("numerical consistency check failed: {0}")]
    Inconsistent(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
