use std::io;
use std::path::PathBuf;

/// Errors surfaced by the command line, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    /// A file was readable but its contents are malformed or violate an invariant.
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Domain(#[from] haqt_core::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Input { path: path.into(), message: message.into() }
    }

    /// 1 for domain failures, 2 for usage and IO problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Domain(_) => 1,
            _ => 2,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
