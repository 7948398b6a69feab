use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("matrix is not Hermitian (violation {violation:e})")]
    NotHermitian { violation: f64 },
    #[error("matrix is not unitary (violation {violation:e})")]
    NotUnitary { violation: f64 },
    #[error("Kraus operators are not trace preserving (violation {violation:e})")]
    NotTracePreserving { violation: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unsupported state set: expected {expected}, got {got}")]
    UnsupportedSet { expected: String, got: String },
    #[error("dimension {d} exceeds the supported limit {limit}")]
    Oversize { d: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ensemble has no usable realizations")]
    EmptyEnsemble,
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag, used in the CLI's JSON error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::InvalidShape(_) => "invalid-shape",
            Error::NotHermitian { .. } => "not-hermitian",
            Error::NotUnitary { .. } => "not-unitary",
            Error::NotTracePreserving { .. } => "not-trace-preserving",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::InvalidBasis(_) => "invalid-basis",
            Error::DegenerateSpectrum(_) => "degenerate-spectrum",
            Error::InvalidSpectrum(_) => "invalid-spectrum",
            Error::InvalidState(_) => "invalid-state",
            Error::UnsupportedSet { .. } => "unsupported-set",
            Error::Oversize { .. } => "oversize",
            Error::InvalidConfig(_) => "invalid-config",
            Error::EmptyEnsemble => "empty-ensemble",
            Error::Internal(_) => "internal",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
