use std::fmt;

use serde_json::json;

/// Failure of a CLI command, reported as JSON on stderr.
#[derive(Debug)]
pub enum CliError {
    /// Config file does not match the schema.
    Schema { path: String, message: String },
    /// Bad command-line usage.
    Usage(String),
    /// Error raised by the library.
    Model(cqed::Error),
    Io(String),
}

impl CliError {
    pub fn schema(path: &str, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.to_string(),
            message: message.into(),
        }
    }

    /// Dotted path of the offending field, when known.
    pub fn path(&self) -> Option<&str> {
        match self {
            CliError::Schema { path, .. } if !path.is_empty() => Some(path),
            CliError::Model(cqed::Error::InvalidParameter { name, .. }) => Some(name),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "schema",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Model(e) => match e {
                cqed::Error::InvalidParameter { .. } | cqed::Error::DimensionMismatch { .. } => "validation",
                cqed::Error::Unsupported(_) => "unsupported",
                cqed::Error::Units(_) => "units",
                cqed::Error::TruncationOverflow { .. } => "truncation_overflow",
                cqed::Error::Analysis(_) => "analysis",
                _ => "solver",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "schema" | "usage" | "validation" | "unsupported" | "units" => 2,
            "truncation_overflow" => 4,
            "io" => 5,
            _ => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": { "kind": self.kind(), "message": self.to_string() } });
        if let Some(p) = self.path() {
            v["error"]["path"] = json!(p);
        }
        v.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema { path, message } if path.is_empty() => write!(f, "{message}"),
            CliError::Schema { path, message } => write!(f, "{path}: {message}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cqed::Error> for CliError {
    fn from(e: cqed::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
