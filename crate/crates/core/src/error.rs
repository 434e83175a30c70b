use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument or configuration value is outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    /// Model state is inconsistent (shape mismatch, non-finite parameters).
    #[error("model error: {0}")]
    Model(String),

    /// The experiment configuration could not be parsed or validated.
    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output directory {0} already exists (pass --force to overwrite)")]
    OutputExists(PathBuf),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Prefixes the parameter name or config path with `scope.`.
    pub fn scoped(self, scope: &str) -> Self {
        match self {
            Error::Parameter { name, reason } => Error::Parameter {
                name: format!("{scope}.{name}"),
                reason,
            },
            Error::Config { path, reason } => Error::Config {
                path: format!("{scope}.{path}"),
                reason,
            },
            other => other,
        }
    }

    /// Reports a parameter error as a configuration error at the same path.
    pub fn into_config(self) -> Self {
        match self {
            Error::Parameter { name, reason } => Error::Config { path: name, reason },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
