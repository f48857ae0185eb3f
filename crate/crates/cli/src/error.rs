use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error("numerical fault: {0}")]
    Numerical(thirring_core::Error),
}

impl CliError {
    /// 2 for usage, configuration and artifact problems; 3 for numerical faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Artifact(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<thirring_core::Error> for CliError {
    fn from(e: thirring_core::Error) -> Self {
        match e {
            thirring_core::Error::NonFinite { .. } => CliError::Numerical(e),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Artifact(e.to_string())
    }
}
