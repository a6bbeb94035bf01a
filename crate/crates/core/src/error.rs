use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation budget of {limit} exhausted")]
    BudgetExhausted { limit: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Covariance factorization failed even after the jitter retry.
    #[error("covariance factorization failed for hyperparameters {hyperparameters:?}")]
    Factorization { hyperparameters: Vec<f64> },

    #[error("no successful evaluations available")]
    NoFeasibleData,

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("missing result cells: {0:?}")]
    MissingCells(Vec<String>),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("registry error: {0}")]
    Registry(String),
}
