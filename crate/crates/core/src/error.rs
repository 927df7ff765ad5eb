use thiserror::Error;

/// Errors raised by range, flow and constraint computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("constraint is trivial: {0}")]
    TrivialConstraint(String),

    #[error("sampling infeasible: {0}")]
    SamplingInfeasible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}

pub(crate) fn domain_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
