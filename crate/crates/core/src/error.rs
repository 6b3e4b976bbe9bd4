use alloc::string::String;

/// Errors raised across the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("dimension {dim} exceeds cap {cap}")]
    Size { dim: usize, cap: usize },

    #[error("non-finite entry in matrix input")]
    NonFinite,

    #[error("operator {index} is not PSD (minimum eigenvalue {min_eig:e})")]
    NotPsd { index: usize, min_eig: f64 },

    #[error("effects do not sum to identity (Frobenius deviation {deviation:e})")]
    Completeness { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver finished with status {status}: {detail}")]
    Solver { status: crate::sdpcore::SolveStatus, detail: String },

    #[error("degenerate witness: every shifted operator has zero trace")]
    DegenerateWitness,
}

pub type Result<T> = core::result::Result<T, Error>;
