use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::protocol::ErrorCode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in a document a parse error was detected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    /// Dotted path to a field of a structured document, e.g. `frames[3].quats`.
    Field(String),
    Unknown,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Field(p) if p.is_empty() || p == "." => f.write_str("document root"),
            Location::Field(p) => write!(f, "field `{p}`"),
            Location::Unknown => f.write_str("document"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {reason}")]
pub struct ParseError {
    pub location: Location,
    pub reason: String,
}

impl ParseError {
    pub fn at_line(line: usize, reason: impl Into<String>) -> Self {
        ParseError { location: Location::Line(line), reason: reason.into() }
    }

    pub fn at_field(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ParseError { location: Location::Field(path.into()), reason: reason.into() }
    }

    pub fn new(reason: impl Into<String>) -> Self {
        ParseError { location: Location::Unknown, reason: reason.into() }
    }

    pub(crate) fn from_json(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = err.path().to_string();
        let inner = err.into_inner();
        if path == "." {
            ParseError::at_line(inner.line(), inner.to_string())
        } else {
            ParseError::at_field(path, inner.to_string())
        }
    }

    pub(crate) fn from_toml(err: serde_path_to_error::Error<toml::de::Error>) -> Self {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let reason = inner.message().to_string();
        if path == "." {
            ParseError::new(reason)
        } else {
            ParseError::at_field(path, reason)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error in {source_name}: {error}")]
    Parse { source_name: String, error: ParseError },
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("protocol error {code}: {message}")]
    Protocol { code: ErrorCode, message: String },
    #[error("network error: {0}")]
    Network(#[source] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(source_name: impl Into<String>, error: ParseError) -> Self {
        Error::Parse { source_name: source_name.into(), error }
    }
}

impl Error {
    /// Short machine-readable tag used in `error: <code>: <message>` lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "E_INVALID",
            Error::Parse { .. } => "E_PARSE",
            Error::Io { .. } => "E_IO",
            Error::Numerical(_) => "E_NUMERIC",
            Error::Protocol { code, .. } => code.as_str(),
            Error::Network(_) => "E_NET",
        }
    }
}

impl From<ParseError> for Error {
    fn from(error: ParseError) -> Self {
        Error::Parse { source_name: "<input>".into(), error }
    }
}
