use std::io;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] dealer_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    /// Comparison ran but missed a tolerance.
    #[error("{0}")]
    Tolerance(String),
}

impl CliError {
    /// 1 usage, configuration or output, 2 numerical failure, 3 tolerance miss.
    pub fn exit_code(&self) -> i32 {
        use dealer_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(
                E::InvalidParameter { .. }
                | E::Stability(_)
                | E::GridMismatch(_)
                | E::Precondition(_),
            ) => 1,
            CliError::Core(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
