use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Array shape does not match the declared scenario.
    #[error("structural error: {0}")]
    Structural(String),
    /// Scenario parameters outside their allowed range.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    /// The operation is only defined for a different scenario shape.
    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),
    /// A matrix/behaviour mixes exact and float entries, or the wrong kind was supplied.
    #[error("wrong scalar mode: {0}")]
    WrongMode(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid behaviour: {0}")]
    InvalidBehaviour(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("enumeration cap exceeded: {required} items required, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
