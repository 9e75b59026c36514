use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: {n} qubits exceeds the cap of {cap}")]
    Capacity { what: &'static str, n: usize, cap: usize },

    #[error("invalid circuit: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no SRE strategy applies to circuit `{id}`: {reason}")]
    Unlabelable { id: String, reason: String },

    #[error("negative SRE residue {0:e} below tolerance (simulator bug?)")]
    NegativeResidue(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by bad input rather than a failing computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Precondition(_)
                | Error::Parse { .. }
                | Error::Capacity { .. }
                | Error::Dimension(_)
                | Error::Split(_)
                | Error::Config(_)
                | Error::Format(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
