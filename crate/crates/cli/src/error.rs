use cascade_core::Error;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable record printed on stderr and saved as `error.json`.
    pub fn record(&self) -> Value {
        let message = match self {
            CliError::Parse(m) | CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        };
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": message })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let root = match &e {
            Error::Sweep { source, .. } => source.as_ref(),
            other => other,
        };
        match root {
            Error::InvalidInput(_)
            | Error::Dimension(_)
            | Error::IndexOutOfRange { .. }
            | Error::GridMismatch(_)
            | Error::TensorTooLarge { .. }
            | Error::InvalidGroundMass(_)
            | Error::NonPositiveRegularization(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
