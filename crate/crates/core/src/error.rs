use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is out of its domain. `field` names the offending key.
    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("selection has {selection} items but response has {response}")]
    Misaligned { selection: usize, response: usize },

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("`{operation}` is not supported by the {policy} policy")]
    UnsupportedOperation {
        operation: &'static str,
        policy: &'static str,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
