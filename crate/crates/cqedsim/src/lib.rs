//! Experiment runner around the `cqed` library: flat key=value configs in,
//! CSV tables and a JSON run summary out.

pub mod config;
pub mod experiments;
pub mod output;

/// Errors split by exit code: invalid configuration (1) vs numerical
/// failure (2).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cqed::CqedError> for CliError {
    fn from(e: cqed::CqedError) -> Self {
        match e {
            cqed::CqedError::InvalidArgument(_) | cqed::CqedError::InvalidDimension(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
