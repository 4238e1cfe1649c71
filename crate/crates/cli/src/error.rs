use std::path::PathBuf;

use thiserror::Error;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The latency target cannot be met.
    #[error("{0}")]
    Infeasible(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub const EXIT_INFEASIBLE: i32 = 2;
    pub const EXIT_INVALID: i32 = 3;
    pub const EXIT_IO: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => Self::EXIT_INFEASIBLE,
            CliError::Invalid(_) => Self::EXIT_INVALID,
            CliError::Io { .. } => Self::EXIT_IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<bilinas::Error> for CliError {
    fn from(e: bilinas::Error) -> Self {
        use bilinas::Error as E;
        match e {
            E::Infeasible { .. } | E::FeasibilitySampling { .. } => CliError::Infeasible(e.to_string()),
            E::Io(source) => CliError::Io { path: PathBuf::new(), source },
            other => CliError::Invalid(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
