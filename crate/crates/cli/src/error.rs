use std::path::PathBuf;

use thiserror::Error;

/// Exit code for invalid input: bad config, bad flags, refused model.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for failures while running a valid setup.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error("config key `{key}`{}: {message}", .line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    InvalidKey { key: String, line: Option<usize>, message: String },
    #[error("mode {mode} needs config key `{key}`")]
    MissingKey { key: String, mode: &'static str },
    #[error("config is for mode {config} but {cli} was requested")]
    ModeMismatch { config: &'static str, cli: &'static str },
    #[error(transparent)]
    Core(#[from] varorder_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot start worker threads: {0}")]
    Threads(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_runtime() => EXIT_RUNTIME,
            CliError::Io { .. } | CliError::Threads(_) => EXIT_RUNTIME,
            _ => EXIT_INPUT,
        }
    }
}
