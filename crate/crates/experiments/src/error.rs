use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing artifact {0}; run the scenario first")]
    MissingArtifact(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] aft_core::Error),
    #[error("malformed artifact: {0}")]
    Artifact(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Artifact(e.to_string())
    }
}

impl CliError {
    /// Process exit code: 2 for usage, configuration and artifact problems.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
