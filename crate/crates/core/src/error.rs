use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value is missing or malformed. `field` is the dotted
    /// path into the configuration document, e.g. `grid.dt`.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    /// A memory integral exceeded the blow-up guard.
    #[error("coefficient {series} blew up at t = {time}")]
    Singularity { series: String, time: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("integration failed at t = {time}: {message}")]
    IntegrationFailure { time: f64, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
