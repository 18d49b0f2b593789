use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid gram matrix: {0}")]
    InvalidGram(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("composition failed: {0}")]
    Composition(String),
    #[error("action undefined: {0}")]
    Action(String),
    #[error("inner product undefined: {0}")]
    Pairing(String),
    #[error("lookup failed: {0}")]
    Lookup(String),
    #[error("rebalancing map not well defined at {0}")]
    WellDefinedness(String),
    #[error("matrix-product oracle disagrees: {0}")]
    OracleMismatch(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("parse error at {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
