//! Failures and their process exit codes.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("acceptance threshold failed: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Schema(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::ResourceLimit(_) => 4,
            CliError::Acceptance(_) => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<rdsecrecy::Error> for CliError {
    fn from(e: rdsecrecy::Error) -> Self {
        use rdsecrecy::Error as E;
        match e {
            E::ResourceLimit { .. } => CliError::ResourceLimit(e.to_string()),
            E::EncodingFailure => CliError::Infeasible(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
