use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("affordance `{name}` is degenerate: {positives} positives, {negatives} negatives")]
    DegenerateAffordance {
        name: String,
        positives: usize,
        negatives: usize,
    },

    #[error("invalid feature group layout: {0}")]
    GroupLayout(String),

    #[error("insufficient class counts: {0}")]
    InsufficientClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is already standardized")]
    AlreadyStandardized,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Task {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("validation failed with {} problem(s):\n  {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n  "))]
    Multiple(Vec<Error>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Attaches a task label, e.g. `affordance=pour split=3`.
    pub fn in_task(self, context: impl Into<String>) -> Self {
        Error::Task {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures that originate in the optimizer or linear algebra
    /// rather than in the input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::Task { source, .. } => source.is_numerical(),
            Error::Multiple(errs) => errs.iter().any(Error::is_numerical),
            _ => false,
        }
    }
}
