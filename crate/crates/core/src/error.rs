use std::path::PathBuf;

/// Errors produced anywhere in the embedding pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand dimensions do not agree.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A computation produced or received a NaN/Inf.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid hyperparameters or configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed binary payload (model files, IDX files).
    #[error("format error: {0}")]
    Format(String),

    /// Malformed text input, with the 1-based line where parsing failed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// An index was not present in a constraint oracle.
    #[error("index {0} is not labeled")]
    Unlabeled(usize),

    /// Sampling a pair batch was impossible for this oracle.
    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("metric input error: {0}")]
    Metric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
