use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape { expected: Vec<usize>, got: Vec<usize> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A division or estimate had no usable reference energy.
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("gram matrix of size {size} is numerically singular (condition estimate {condition:.3e})")]
    SingularGram { size: usize, condition: f64 },

    #[error("malformed file {path}: {msg}")]
    Format { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// True for errors caused by a bad configuration rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::ConfigParse { .. } | Error::InvalidConfig { .. })
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
