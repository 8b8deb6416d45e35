use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero finding failed: {0}")]
    ZeroFinding(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("ill-posed moment problem: {0}")]
    IllPosed(String),

    #[error("dimension limit exceeded: {0}")]
    DimensionLimit(String),

    #[error("missing data: {0}")]
    Missing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
