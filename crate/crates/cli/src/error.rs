use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Syntax or type error in the scenario file; the message carries the
    /// line and column.
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },

    /// A field that parsed but is missing, inconsistent or out of range.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error(transparent)]
    Model(#[from] switchnet::Error),

    #[error("serialization failed: {0}")]
    Emit(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}
