use std::path::PathBuf;

use gesc_core::GescError;

/// Failures of the file formats and the command driver. Each loader
/// problem has its own variant so callers can tell them apart.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("dimension mismatch in {what}: manifest declares {declared}, payload has {found}")]
    DimensionMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("duplicate edge {{{0},{1}}}")]
    DuplicateEdge(usize, usize),
    #[error("node {node} has label {label} outside [0, {num_classes})")]
    LabelOutOfRange { node: usize, label: usize, num_classes: usize },
    #[error("unsupported {what} version {found} (expected {expected})")]
    Version {
        what: &'static str,
        expected: u32,
        found: u32,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] GescError),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Self::MissingFile(path)
        } else {
            Self::Io { path, source }
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Self::Json { path: path.into(), source }
    }

    /// Problems with the input rather than with the computation; the
    /// command line maps these to exit code 2.
    pub fn is_input_error(&self) -> bool {
        match self {
            Self::Core(GescError::Dimension { .. } | GescError::Parameter(_)) => true,
            Self::Core(_) => false,
            _ => true,
        }
    }
}

pub type IoResult<T> = Result<T, IoError>;
