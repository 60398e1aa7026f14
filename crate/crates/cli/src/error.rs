use std::process::ExitCode;

use thiserror::Error;

/// Failures of a CLI verb, each mapped to a documented exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },

    #[error("simulation unstable: {0}")]
    Unstable(gbbmb_core::Error),

    #[error("verification inconclusive: {0}")]
    Inconclusive(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] gbbmb_core::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 0 success, 1 config (and other setup) errors, 2 instability,
    /// 3 verification inconclusive.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Unstable(_) => 2,
            CliError::Inconclusive(_) => 3,
            _ => 1,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
