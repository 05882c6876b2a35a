use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobustError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Numerical rank of the design is below the number of regressors.
    #[error("design is rank deficient: numerical rank {rank} < {columns} columns")]
    RankDeficient { rank: usize, columns: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid penalty rule: {0}")]
    InvalidRule(String),

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, RobustError>;
