use thiserror::Error;

/// Failures mapped onto the documented process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hflow_core::Error),
    #[error("{0}")]
    Numerical(String),
    #[error("lemma verification failed: {0}")]
    Lemmas(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 1 config/usage, 2 numerical hard failure, 3 lemma failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                hflow_core::Error::Solver { .. } | hflow_core::Error::Fit(_) => 2,
                _ => 1,
            },
            CliError::Numerical(_) => 2,
            CliError::Lemmas(_) => 3,
        }
    }
}
