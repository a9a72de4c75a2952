use std::path::{Path, PathBuf};

use rideprobe_core::Error;

pub type AppResult<T> = std::result::Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("{role} source not found: {}", path.display())]
    MissingSource { role: String, path: PathBuf },

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error("{0}")]
    Internal(String),
}

impl AppError {
    pub fn config(path: &Path, message: impl Into<String>) -> Self {
        AppError::Config {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// 0 ok, 2 input error, 3 empty result, 1 internal.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Core(
                Error::NoMatchingTrips { .. } | Error::EmptyDay { .. } | Error::InvalidStats(_),
            ) => 3,
            AppError::Core(_)
            | AppError::Config { .. }
            | AppError::MissingSource { .. }
            | AppError::Usage(_) => 2,
            AppError::Internal(_) => 1,
        }
    }
}
