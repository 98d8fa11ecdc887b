use thiserror::Error;
use warped_core::GeometryError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_string(), source }
    }

    /// Line and column of a byte offset in `text`, both 1-based.
    pub fn parse(path: &str, text: &str, offset: usize, message: impl Into<String>) -> Self {
        let before = &text[..offset.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        CliError::Parse { path: path.to_string(), line, column, message: message.into() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
