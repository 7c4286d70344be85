use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown scenario {0:?}; see `spectral-covers list`")]
    UnknownScenario(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: spectral_covers::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches the name of the module a core error came from.
pub(crate) trait Context<T> {
    fn ctx(self, context: &'static str) -> Result<T>;
}

impl<T> Context<T> for spectral_covers::Result<T> {
    fn ctx(self, context: &'static str) -> Result<T> {
        self.map_err(|source| CliError::Core { context, source })
    }
}
