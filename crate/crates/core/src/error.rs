use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A positioned problem in an automaton file or element expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("elements belong to different automata")]
    MismatchedAutomata,
    #[error("letter {letter} out of range for an alphabet of size {degree}")]
    LetterOutOfRange { letter: usize, degree: usize },
    #[error("level {level} has {leaves} leaves, over the table budget of {budget}")]
    TableOverflow {
        level: usize,
        leaves: u128,
        budget: usize,
    },
    #[error("section closure exceeded the budget of {budget} nodes")]
    ClosureOverflow { budget: usize },
    #[error("level-{level} quotient exceeded the budget of {budget} elements")]
    QuotientOverflow { level: usize, budget: usize },
    #[error("permutation table is not an element of the level-{level} quotient")]
    NotInQuotient { level: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),
    #[error("{0}")]
    Parse(Diagnostic),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for the budget-exhaustion family of errors.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::TableOverflow { .. }
                | Error::ClosureOverflow { .. }
                | Error::QuotientOverflow { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
