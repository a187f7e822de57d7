use std::path::PathBuf;

use cuspdiv_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("selftest failed {failed} of {total} checks")]
    SelftestFailed { failed: usize, total: usize },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 0 success, 1 failed check or runtime failure, 2 bad configuration,
    /// 3 solver non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::NonConvergence { .. } => 3,
                CoreError::InvalidParams(_)
                | CoreError::OutOfRange { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::NotAdmissible { .. }
                | CoreError::UnderResolved { .. }
                | CoreError::DisconnectedInterior { .. } => 2,
                _ => 1,
            },
            CliError::SelftestFailed { .. } | CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
