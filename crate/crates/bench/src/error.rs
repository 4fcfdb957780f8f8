use ope_core::OpeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("estimation failed: {0}")]
    Estimation(#[from] OpeError),

    #[error("bootstrap needs at least one sample")]
    EmptySamples,

    #[error("I/O failure: {0}")]
    IoFailure(String),
}

impl BenchError {
    /// Process exit status for this error: 1 for configuration and estimation
    /// problems, 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::IoFailure(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        Self::IoFailure(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        Self::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
