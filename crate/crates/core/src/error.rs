use std::path::PathBuf;

/// Errors surfaced by the workbench.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A population, scenario or mapping description is malformed.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called with arguments outside its contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// A quantity is undefined for the given input (empty distribution, empty sets).
    #[error("undefined input: {0}")]
    UndefinedInput(String),
    /// A target probability cannot be reached by any sample size.
    #[error("unreachable target: {0}")]
    Unreachable(String),
    /// The timing probes did not agree with any candidate geometry.
    #[error("geometry inference failed: {0}")]
    Inference(String),
    /// Persisted records carry an unexpected schema or version.
    #[error("schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },
    /// A persisted record could not be parsed.
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
