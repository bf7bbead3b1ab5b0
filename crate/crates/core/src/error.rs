use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode partition: {0}")]
    InvalidPartition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid rank: {0}")]
    InvalidRank(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("ingest error: {0}")]
    Ingest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidPartition(_) => "invalid-partition",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::InvalidShape(_) => "invalid-shape",
            Error::InvalidRank(_) => "invalid-rank",
            Error::InvalidData(_) => "invalid-data",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Numerical(_) => "numerical-failure",
            Error::Format(_) => "format-error",
            Error::Ingest(_) => "ingest-error",
            Error::Io(_) => "io-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
