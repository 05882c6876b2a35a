use roblasso::RobustError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable file, malformed CSV or unusable data.
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    RankDeficient(String),

    #[error("{0}")]
    InvalidFlags(String),

    #[error("{failures} of {requested} replications failed with a rank-deficient design")]
    ReplicationFailures { failures: usize, requested: usize },

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::RankDeficient(_) => 3,
            CliError::InvalidFlags(_) => 4,
            CliError::ReplicationFailures { .. } => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl From<RobustError> for CliError {
    fn from(e: RobustError) -> Self {
        let msg = e.to_string();
        match e {
            RobustError::RankDeficient { .. } => CliError::RankDeficient(msg),
            RobustError::InvalidConfig(_) | RobustError::InvalidRule(_) | RobustError::DomainError(_) => {
                CliError::InvalidFlags(msg)
            }
            RobustError::DimensionMismatch(_) | RobustError::Io(_) => CliError::Input(msg),
            RobustError::NonFinite(_) => CliError::Other(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
