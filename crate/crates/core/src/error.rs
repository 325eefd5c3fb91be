use std::fmt;

use thiserror::Error;

/// Where a parse error happened inside an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// 1-based line (and column when known).
    Line { line: usize, column: Option<usize> },
    /// A named field, e.g. `edges[3].u`.
    Field(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line { line, column: Some(c) } => write!(f, "line {line}, column {c}"),
            Location::Line { line, column: None } => write!(f, "line {line}"),
            Location::Field(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} has zero total influence")]
    ZeroInfluence { node: usize },

    #[error("node {node} is already active")]
    AlreadyActive { node: usize },

    #[error("node {node} out of range for a network of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid network: {}", .0.join("; "))]
    InvalidNetwork(Vec<String>),

    #[error("invalid tree decomposition: {}", .0.join("; "))]
    InvalidDecomposition(Vec<String>),

    #[error("{what} of size {size} exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("network is disconnected")]
    Disconnected,

    #[error("weight {weight} on {from}->{to} is not a nonnegative integer")]
    NonIntegerWeight { from: usize, to: usize, weight: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse_field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Field(field.into()),
            message: message.into(),
        }
    }

    pub(crate) fn parse_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Line { line, column: None },
            message: message.into(),
        }
    }

    /// True for refusals caused by the configured size guards.
    pub fn is_size_limit(&self) -> bool {
        matches!(self, Error::SizeLimit { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            location: Location::Line {
                line: e.line(),
                column: Some(e.column()),
            },
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
