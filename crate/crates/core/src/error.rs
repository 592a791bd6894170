use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    #[error("projection undefined: feature Gram matrix has rank {rank} < {k}")]
    ProjectionUndefined { rank: usize, k: usize },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("degenerate Gaussian model: covariance could not be factorised")]
    DegenerateModel,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    NumericalAbort(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
