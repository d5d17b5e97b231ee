use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("input format error: {0}")]
    Format(String),

    #[error("{malformed} of {total} records malformed, input is probably not {format}")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        format: &'static str,
    },

    #[error("cache error: {0}")]
    Cache(String),

    #[error("empty project {0}")]
    EmptyProject(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal consistency violation: {0}")]
    Consistency(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than by the tool.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format(_)
                | Error::TooManyMalformed { .. }
                | Error::Cache(_)
                | Error::EmptyProject(_)
                | Error::Config(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
