use std::fmt;

/// Errors raised anywhere in the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("unsupported construct: {0}")]
    Unsupported(String),

    #[error("lowering error at {node}: {message}")]
    Lowering { node: String, message: String },

    #[error("execution error in {context}: {message}")]
    Exec { context: String, message: String },

    #[error("type error: {0}")]
    Type(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a parse error happened. Table files report rows, SQL reports line/column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Row(usize),
    LineColumn { line: usize, column: usize },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Row(row) => write!(f, "row {row}"),
            Location::LineColumn { line, column } => write!(f, "line {line}, column {column}"),
        }
    }
}

impl Error {
    pub(crate) fn plan(msg: impl Into<String>) -> Self {
        Error::Plan(msg.into())
    }

    pub(crate) fn exec(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Exec {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn lowering(node: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Lowering {
            node: node.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
