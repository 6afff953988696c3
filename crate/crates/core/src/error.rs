use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate `{field}` must be positive, got {value}")]
    Domain { field: &'static str, value: f64 },

    #[error("value out of floating range: {0}")]
    Range(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite value at node {node}{}", .time.map(|t| format!(" (t = {t})")).unwrap_or_default())]
    NonFinite { node: usize, time: Option<f64> },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("run did not end in a blow-up status ({0})")]
    NotBlowUp(String),

    #[error("not enough samples: need {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a time stamp to a non-finite error raised deep in the rhs.
    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            Error::NonFinite { node, time: None } => Error::NonFinite { node, time: Some(t) },
            other => other,
        }
    }
}
