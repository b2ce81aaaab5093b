use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {component} at step {step}")]
    NonFinite { step: usize, component: String },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("threshold estimation failed: {0}")]
    Estimation(String),

    #[error("symbolizer fit failed: {0}")]
    Fit(String),

    #[error("invalid span [{t1}, {t2}] for sequence of {n_steps} steps")]
    Span { t1: usize, t2: usize, n_steps: usize },

    #[error("too many test conditions: {count} exceeds cap {cap}")]
    TooManyConditions { count: u128, cap: usize },

    #[error("mismatched series: {0}")]
    Series(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("external mutator failed: {0}")]
    Plugin(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn shape(what: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
