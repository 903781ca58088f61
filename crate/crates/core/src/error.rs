use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("user index {index} out of range (valid: {valid})")]
    UserIndex { index: usize, valid: String },

    #[error("power bisection failed after {iterations} iterations: power {power:e} W vs budget {budget:e} W at mu = {mu:e}")]
    Bisection {
        iterations: usize,
        mu: f64,
        power: f64,
        budget: f64,
    },

    #[error("exhaustive grid of {size} points exceeds the limit of {limit}")]
    GridTooLarge { size: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
