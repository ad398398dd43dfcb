use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("bad dimensions: {0}")]
    BadDims(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("reference matrix has zero Frobenius norm")]
    ZeroTruth,

    #[error("matrix columns are not orthonormal (deviation {0:.3e})")]
    NotIsometry(f64),

    #[error("all observed values are zero; spectral gaps are undefined")]
    ZeroObservation,

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
