use thiserror::Error;

/// Errors surfaced by the harness, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(sparsecs_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<sparsecs_core::Error> for CliError {
    fn from(e: sparsecs_core::Error) -> Self {
        use sparsecs_core::Error as E;
        match e {
            E::InvalidConfig(m) => CliError::Config(m),
            E::Numerical(m) => CliError::Numerical(m),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// Process exit code: 2 configuration, 3 missing artifact, 4 numerical
    /// failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingArtifact(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
