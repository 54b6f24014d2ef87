use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's precondition (wrong color space,
    /// channel count, mismatched shapes).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A parameter was outside its valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A strength or time value fell outside `[0, 1]`.
    #[error("{name} = {value} is outside [0, 1]")]
    Range { name: &'static str, value: f64 },

    /// Input data is unusable (bad file contents, divergent training, empty dataset).
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png decode error at {path}: {message}")]
    Png { path: PathBuf, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that `value` lies in `[0, 1]`.
pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Range { name, value })
    }
}
