use antichiral_core::ErrorClass;
use serde::Serialize;
use thiserror::Error;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitCode(pub i32);

impl ExitCode {
    pub const SUCCESS: ExitCode = ExitCode(0);
    pub const CONFIG: ExitCode = ExitCode(1);
    pub const NUMERICAL: ExitCode = ExitCode(2);
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] antichiral_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Machine-readable error report written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub class: &'static str,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => ExitCode::CONFIG,
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => ExitCode::CONFIG,
                ErrorClass::Numerical => ExitCode::NUMERICAL,
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        let message = self.to_string();
        match self {
            CliError::Config { field, .. } => {
                ErrorReport { class: "config", reason: "invalid_config".into(), field: Some(field.clone()), message }
            }
            CliError::Io { path, .. } => {
                ErrorReport { class: "config", reason: "io".into(), field: Some(path.clone()), message }
            }
            CliError::Core(e) => {
                let field = match e {
                    antichiral_core::Error::InvalidInput { field, .. } => Some(field.to_string()),
                    _ => None,
                };
                let class = if self.exit_code() == ExitCode::CONFIG { "config" } else { "numerical" };
                ErrorReport { class, reason: e.code().into(), field, message }
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
