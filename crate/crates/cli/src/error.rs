use mrkit::MrError;
use thiserror::Error;

/// CLI failures partitioned by exit code: 1 usage, 2 data, 3 numeric.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<MrError> for CliError {
    fn from(err: MrError) -> Self {
        if err.is_numeric() {
            CliError::Numeric(err.to_string())
        } else {
            CliError::Data(err.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(format!("JSON error: {err}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
