use thiserror::Error;

/// Errors raised by the library contract.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid search domain: {0}")]
    InvalidDomain(String),

    #[error(
        "problem {0} is a composition function and is not built in; \
         supply it through BenchmarkProblem::custom"
    )]
    UnsupportedProblem(u32),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation budget exhausted")]
    BudgetExhausted,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Outcome of a refused objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation budget exhausted")]
    BudgetExhausted,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl From<EvalError> for Error {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::DimensionMismatch { expected, found } => {
                Error::DimensionMismatch { expected, found }
            }
            EvalError::BudgetExhausted => Error::BudgetExhausted,
        }
    }
}
