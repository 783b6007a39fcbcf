use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate grid point {0}")]
    DuplicateGridPoint(f64),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("curves are not observed on the same grid")]
    GridMismatch,
    #[error("invalid neighbour count k = {k} for a grid of {len} points")]
    InvalidK { k: usize, len: usize },
    #[error("invalid band order J = {order} for a sample of {n} curves")]
    InvalidOrder { order: usize, n: usize },
    #[error("dataset contains no curves")]
    EmptyDataset,
    #[error("Hurst index must lie in (0, 1), got {0}")]
    InvalidHurst(f64),
    #[error("grid point {0} outside the domain of the process")]
    InvalidDomain(f64),
    #[error("covariance matrix is not positive semidefinite (jitter up to {max_jitter:e} tried)")]
    NotPositiveSemidefinite { max_jitter: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than the input data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
