use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is rank deficient (smallest singular value {min_singular_value:e})")]
    RankDeficient { min_singular_value: f64 },

    #[error("custom whitener does not yield a positive definite covariance")]
    SingularCustomWhitener,

    #[error("direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid source specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("zero denominator in asymptotic variance for component {k} (pair partner {l})")]
    ZeroDenominator { k: usize, l: usize },

    #[error("assumption {0} violated by the source moments")]
    AssumptionViolated(u8),

    #[error("singular input matrix")]
    SingularInput,

    #[error("all {restarts} restarts failed")]
    AllRestartsFailed { restarts: usize },

    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },
}

impl Error {
    /// Stable identifier used by the command line front-end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::SingularCustomWhitener => "SingularCustomWhitener",
            Error::NotUnit { .. } => "NotUnit",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidData(_) => "InvalidData",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidParams(_) => "InvalidParams",
            Error::ZeroDenominator { .. } => "ZeroDenominator",
            Error::AssumptionViolated(_) => "AssumptionViolated",
            Error::SingularInput => "SingularInput",
            Error::AllRestartsFailed { .. } => "AllRestartsFailed",
            Error::TooManyFailures { .. } => "TooManyFailures",
        }
    }

    /// Offending component index, when the error carries one.
    pub fn component(&self) -> Option<usize> {
        match self {
            Error::ZeroDenominator { k, .. } => Some(*k),
            Error::IndexOutOfRange { index, .. } => Some(*index),
            _ => None,
        }
    }
}
