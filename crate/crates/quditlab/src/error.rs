//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulator and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix deviates from Hermitian symmetry beyond the admitted tolerance.
    #[error("matrix is not Hermitian: max |m[i,j] - conj(m[j,i])| = {deviation:e} exceeds {tolerance:e}")]
    NonHermitianInput { deviation: f64, tolerance: f64 },

    /// Matrix has an eigenvalue below the PSD tolerance.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e} below -{tolerance:e}")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    /// Two operands have incompatible dimensions.
    #[error("dimension mismatch: {left} vs {right} in {context}")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// A site or level index lies outside the register.
    #[error("index {index} out of range ({bound}) in {context}")]
    IndexOutOfRange {
        index: usize,
        bound: usize,
        context: &'static str,
    },

    /// Requested register exceeds the dense-dimension cap.
    #[error("total dimension {dim} exceeds dense cap {cap} (override with QUDITLAB_DENSE_CAP)")]
    DimensionCapExceeded { dim: usize, cap: usize },

    /// A state that must have unit trace does not.
    #[error("state trace {trace} deviates from 1 beyond {tolerance:e} ({context})")]
    NonUnitTrace {
        trace: f64,
        tolerance: f64,
        context: &'static str,
    },

    /// The projection onto the encoding subspace carries (numerically) no weight.
    #[error("encoding-subspace projection trace {trace:e} underflows threshold {threshold:e}")]
    EmptyEncodingSupport { trace: f64, threshold: f64 },

    /// Fit input is constant; no decay parameters are identifiable.
    #[error("degenerate series: values span {span:e}, nothing to fit")]
    DegenerateSeries { span: f64 },

    /// A precondition on user-supplied data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix entries contain NaN or infinity.
    #[error("non-finite entry encountered in {0}")]
    NonFiniteEntry(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
