use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Every observation in the top-k is censored (or p̂ = 0).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    /// The second log-moment does not exceed the squared first one.
    #[error("singular moments: M2 - M1^2 = {gap:e}")]
    SingularMoments { gap: f64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An asymptotic formula was asked for outside its validity region.
    #[error("guard violated: {0}")]
    Guard(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Range(_) => ErrorKind::Usage,
            Error::Parse { .. } | Error::Io(_) => ErrorKind::Data,
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::SingularMoments { .. }
            | Error::Evaluation(_)
            | Error::Guard(_)
            | Error::Numeric(_) => ErrorKind::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
