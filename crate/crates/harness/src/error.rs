use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(#[from] lock_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> Self + '_ {
        move |source| Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Core(_) => "computation",
        }
    }

    /// Single-line JSON report: `{"error": {"kind", "message", "field"?}}`.
    pub fn to_json_line(&self) -> String {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let Error::Validation { field, .. } = self {
            body["field"] = json!(field);
        }
        json!({ "error": body }).to_string()
    }
}
