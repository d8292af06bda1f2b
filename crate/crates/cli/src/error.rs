use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Already formatted as `file:line:column: message`.
    #[error("{0}")]
    Config(String),
    #[error("cannot listen on {addr}: {reason}")]
    Bind { addr: String, reason: String },
    #[error("run aborted: {reason}\nlast checkpoint: {}", checkpoint.as_ref().map_or("none".into(), |p| p.display().to_string()))]
    Aborted { reason: String, checkpoint: Option<PathBuf> },
    #[error("{failed} of {total} inputs failed")]
    PartialFailure { failed: usize, total: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Bind { .. } => 2,
            CliError::Aborted { .. } => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
