use std::path::PathBuf;

use segtopic_core::ErrorKind;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] segtopic_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl std::fmt::Display) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    /// 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            },
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Mismatch(_) => 2,
        }
    }
}
