use netflow_core::Error;
use std::fmt;
use std::process::ExitCode;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    /// A graph or fixture failed validation (status 1).
    Validation(String),
    /// A computation or a numeric tolerance failed (status 2).
    Numeric(String),
    /// Unreadable or malformed input (status 3).
    Input(String),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Validation(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Input(_) => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Input(m) => write!(f, "bad input: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::MalformedGraph(_)
            | Error::MissingVelocity(_)
            | Error::InvalidVelocity { .. }
            | Error::NotRational(_)
            | Error::Precision(_)
            | Error::MalformedState(_)
            | Error::Argument(_)
            | Error::Parse { .. }
            | Error::Io(_) => Failure::Input(message),
            Error::Overflow { .. }
            | Error::WrongOperator(_)
            | Error::Domain(_)
            | Error::Truncation { .. }
            | Error::ContractionViolation { .. }
            | Error::Unsupported(_) => Failure::Numeric(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
