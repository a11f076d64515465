use netwhittle::ErrorClass;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: netwhittle::Error,
    },
}

impl From<netwhittle::Error> for CliError {
    fn from(source: netwhittle::Error) -> Self {
        CliError::Core { context: "error".into(), source }
    }
}

impl CliError {
    /// Exit status: 1 for configuration, 2 for data, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Core { source, .. } => match source.class() {
                ErrorClass::Config => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            },
        }
    }
}

/// Attaches a description of the failing step to library errors.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T>;
}

impl<T> Context<T> for netwhittle::Result<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T> {
        self.map_err(|source| CliError::Core { context: what.into(), source })
    }
}
