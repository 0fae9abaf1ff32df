use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] polariton::Error),

    /// Some compared points exceed the tolerance.
    #[error("{failed} of {checked} compared points exceed the tolerance {tolerance}")]
    Tolerance {
        failed: usize,
        checked: usize,
        tolerance: f64,
    },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 0 success, 1 usage/config, 2 numerical failure, 3 tolerance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                polariton::Error::Numerical(_) | polariton::Error::EnsembleAborted { .. } => 2,
                _ => 1,
            },
            CliError::Tolerance { .. } => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
