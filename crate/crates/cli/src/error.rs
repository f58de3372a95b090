use std::path::PathBuf;

/// Failures surfaced by the harness, each tied to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dsvkernel::Error),

    #[error("{path}: row {row}, column '{column}': {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("{0}")]
    NonConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 2 for bad input, 3 for a solver that ran out of passes, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(_)
            | CliError::Parse { .. }
            | CliError::Invalid(_)
            | CliError::Format { .. } => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
