use serde::Serialize;
use thiserror::Error;

/// Errors of the experiment runner. Each carries the offending field or
/// path so that the machine-readable error record can point at it.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("report has no data for series `{0}`")]
    MissingSeries(String),

    #[error(transparent)]
    Core(#[from] segsr_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::ConfigInvalid { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigParse { .. } => "ConfigParse",
            CliError::ConfigInvalid { .. } => "ConfigInvalid",
            CliError::Io { .. } => "IoError",
            CliError::MissingSeries(_) => "MissingSeries",
            CliError::Core(_) => "CoreError",
        }
    }

    /// JSON object printed on failure.
    pub fn record(&self) -> ErrorRecord {
        let field = match self {
            CliError::ConfigParse { path, .. } | CliError::Io { path, .. } => Some(path.clone()),
            CliError::ConfigInvalid { field, .. } => Some(field.clone()),
            CliError::MissingSeries(s) => Some(s.clone()),
            CliError::Core(_) => None,
        };
        ErrorRecord { error: self.kind(), field, message: self.to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub field: Option<String>,
    pub message: String,
}
