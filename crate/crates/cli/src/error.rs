use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("stochasticity violated: residual {residual:.3e} exceeds {tolerance:.1e}")]
    Stochasticity { residual: f64, tolerance: f64 },
    #[error("ensemble is reducible")]
    Reducible,
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        source: darktraj_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stochasticity { .. } => 2,
            CliError::Reducible => 3,
            CliError::Io { .. } | CliError::Config(_) => 4,
            CliError::Stage { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl ToString) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

/// Tags a core error with the stage it came from.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for darktraj_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
