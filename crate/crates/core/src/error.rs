use thiserror::Error;

/// Errors raised by the audit toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter has {got} coordinates but the family expects {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter coordinate {index} = {value} lies outside [{lo}, {hi}]")]
    Domain { index: usize, value: f64, lo: f64, hi: f64 },

    #[error("free probabilities sum to {sum}, above the simplex cap {cap}")]
    Simplex { sum: f64, cap: f64 },

    #[error("parameter coordinate {index} is not finite")]
    NonFinite { index: usize },

    #[error("feed is empty")]
    EmptyFeed,

    #[error("feed item {index} = {value} is outside the sample space")]
    OutOfSupport { index: usize, value: f64 },

    #[error("Fisher information is singular at {theta:?}")]
    SingularInformation { theta: Vec<f64> },

    #[error("probability {0} is outside the open interval (0, 1)")]
    Probability(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid model family: {0}")]
    Family(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("source `{source_name}` failed on input `{input}`: {message}")]
    Source {
        source_name: String,
        input: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Domain { .. } | Error::Simplex { .. } | Error::NonFinite { .. } => "parameter-domain",
            Error::EmptyFeed => "empty-feed",
            Error::OutOfSupport { .. } => "out-of-support",
            Error::SingularInformation { .. } => "singular-information",
            Error::Probability(_) | Error::Range(_) => "range",
            Error::Shape(_) => "shape",
            Error::Family(_) => "family",
            Error::Config(_) => "config",
            Error::Source { .. } => "source",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
