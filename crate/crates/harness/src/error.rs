use std::path::PathBuf;

use crate::config::ValidationError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] accel_core::Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl HarnessError {
    /// 1 for validation and check failures, 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 2,
            Self::Validation(_) | Self::Core(_) | Self::ChecksFailed { .. } => 1,
        }
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;
