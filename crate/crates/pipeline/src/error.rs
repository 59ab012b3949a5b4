use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("table store is empty")]
    EmptyStore,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("share set incomplete: expected {expected} shares, got {got}")]
    MissingShares { expected: usize, got: usize },

    #[error("refresh unavailable: {0}")]
    RefreshUnavailable(String),

    #[error(transparent)]
    Ckks(#[from] pcol_ckks::CkksError),

    #[error(transparent)]
    Threshold(#[from] pcol_threshold::ThresholdError),

    #[error(transparent)]
    Quadrature(#[from] pcol_core::QuadratureError),

    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("manifest: {0}")]
    Manifest(String),
}
