//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar policy was paired with a game that is not two-symbol.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A probability vector or matrix failed validation.
    #[error("invalid game: {0}")]
    InvalidGame(String),

    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Multitask flow analysis requires both instructors to share an
    /// initialization.
    #[error("unsupported initialization: {0}")]
    UnsupportedInitialization(String),

    /// Unknown attack-table variant or preset name.
    #[error("unknown variant: {0}")]
    UnknownVariant(String),

    /// Invalid run or training configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
