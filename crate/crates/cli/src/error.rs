use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hphi_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// Numerical breakdowns count as failed checks; everything else is bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(hphi_core::Error::NonFiniteSample { .. } | hphi_core::Error::NonFinite) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
