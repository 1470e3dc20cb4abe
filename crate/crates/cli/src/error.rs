use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invariant(ris_crlb::Error),
    #[error("{0}")]
    Singular(ris_crlb::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for an unidentifiable configuration,
    /// 4 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Invariant(_) => 2,
            CliError::Singular(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ris_crlb::Error> for CliError {
    fn from(e: ris_crlb::Error) -> Self {
        use ris_crlb::Error as E;
        match e {
            E::SingularFim { .. } | E::AllSingular => CliError::Singular(e),
            E::DegenerateGeometry(_) | E::SingularJacobian(_) | E::Config(_) | E::Invariant(_) => {
                CliError::Invariant(e)
            }
        }
    }
}
