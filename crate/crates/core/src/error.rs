use thiserror::Error;

/// Errors produced by design construction, evaluation, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix (numerical rank {rank} of {dim})")]
    Singular { rank: usize, dim: usize },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Analysis(String),
}

impl Error {
    /// Exit code the CLI maps this error onto: 1 for validation and parse
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular { .. } | Error::Domain(_) | Error::Analysis(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
