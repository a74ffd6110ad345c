use std::path::Path;

use jacobi_fields::Error as CoreError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRUNCATION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_CHECK: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_owned(), message: message.into() }
    }

    pub fn missing(field: &str) -> Self {
        Self::config(field, "required but not given")
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    /// Tags a core error raised while interpreting `field`.
    pub fn in_field(field: &str) -> impl FnOnce(CoreError) -> CliError + '_ {
        move |e| match e {
            CoreError::Parse(msg) => CliError::config(field, msg),
            other => CliError::Core(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::Shape(_) | CoreError::Parse(_) => EXIT_CONFIG,
                CoreError::Bounds { .. } | CoreError::Truncation { .. } => EXIT_TRUNCATION,
                CoreError::Degenerate { .. } | CoreError::Numeric(_) => EXIT_NUMERIC,
                CoreError::Statistical(_) => EXIT_CHECK,
            },
        }
    }
}
