use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("n = {n} exceeds the supported bound of {max} for {what}")]
    TooLarge { what: &'static str, n: usize, max: usize },

    #[error("noise target {sigma_e_sq:e} is not above the relay-noise floor {floor:e}")]
    InfeasibleNoiseTarget { sigma_e_sq: f64, floor: f64 },

    #[error("no root of the power equation found after {steps} bracket steps")]
    NoRoot { steps: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("realization {index} failed during {stage}: {source}")]
    Realization {
        index: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
