use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: malformed JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    /// A core library error, tagged with the stage that raised it.
    #[error("{stage}: {source}")]
    Core { stage: &'static str, source: wpfusion_core::Error },
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("{}: {reason}", path.display())]
    BadFile { path: PathBuf, reason: String },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        AppError::InvalidConfig { field: field.into(), reason: reason.into() }
    }
}

/// Tags core errors with the pipeline stage.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> Stage<T> for Result<T, wpfusion_core::Error> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| AppError::Core { stage, source })
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
