use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },

    #[error("fixed T0 = {given} disagrees with the initial data, which give {derived} (tolerance 1e-9)")]
    T0Mismatch { given: f64, derived: f64 },

    #[error("unknown builtin '{0}' (try `thermoflock list`)")]
    UnknownBuiltin(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{model}: {source}")]
    Integration {
        model: thermoflock_core::Model,
        #[source]
        source: thermoflock_core::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for bad input or output paths, 3 for a failed
    /// integration. Check failures (status 1) are not errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Integration { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn invalid(field: &'static str, message: impl ToString) -> Self {
        CliError::Invalid {
            field,
            message: message.to_string(),
        }
    }
}
