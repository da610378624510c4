//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("gamma too small: {0}")]
    GammaInfeasible(String),

    #[error("degenerate active set: {0}")]
    DegenerateActiveSet(String),

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("mode requirements violated: {0}")]
    Mode(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("certificate violation: {0}")]
    Certificate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the dynamic-programming stage it occurred in.
    pub fn at_stage(self, stage: usize) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
