use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("assignment has length {got}, instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("assignment leaves variable {0} unassigned")]
    Unassigned(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("search space {space} exceeds budget {budget}")]
    BudgetExceeded { space: f64, budget: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
