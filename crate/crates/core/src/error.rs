use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row}); increase the L2 regularization lambda")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dense oracle limited to min(m, n) <= {cap}, got {got}")]
    OracleCapExceeded { cap: usize, got: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("dataset contains no interactions")]
    EmptyDataset,

    #[error("not enough eligible users for the requested split: need {needed}, have {available}")]
    InsufficientUsers { needed: usize, available: usize },

    #[error("invalid split spec: {0}")]
    InvalidSplit(String),

    #[error("dropout probability must lie in [0, 1), got {0}")]
    InvalidDropout(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("user {user} has no holdout items")]
    EmptyHoldout { user: usize },

    #[error("training diverged (non-finite loss) even at learning rate {lr:e}")]
    Divergence { lr: f64 },

    #[error("bad model file: {0}")]
    ModelFormat(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{kind} k={rank} lambda={lambda} p={dropout}: {source}")]
    GridPoint {
        kind: &'static str,
        rank: usize,
        lambda: f64,
        dropout: f64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures, as opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::NoConvergence { .. }
                | Error::Divergence { .. }
                | Error::NonFinite(_)
        ) || matches!(self, Error::GridPoint { source, .. } if source.is_numerical())
    }
}
