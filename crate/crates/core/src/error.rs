use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A CSV cell or row could not be turned into a finite number.
    /// `row` and `column` are 1-based positions in the file.
    #[error("ingest error at row {row}, column {column}: {message}")]
    Ingest {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),

    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank failure: {0}")]
    Rank(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("overflow evaluating mode {mode} at power {power}")]
    Overflow { mode: usize, power: i64 },

    #[error("invalid modal specification: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration produced a non-finite state at step {step}")]
    Integration { step: usize },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Spec(_) => ErrorClass::Config,
            Error::Ingest { .. } | Error::Io(_) | Error::Bounds(_) | Error::Shape(_) => {
                ErrorClass::Data
            }
            Error::Rank(_)
            | Error::Numerical(_)
            | Error::Overflow { .. }
            | Error::Integration { .. } => ErrorClass::Numerical,
        }
    }
}
