use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GescError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("cannot split: {0}")]
    Split(String),
    #[error("synthetic generation infeasible: {0}")]
    Generation(String),
    #[error("non-finite value produced at stage `{stage}`")]
    NonFinite { stage: &'static str },
    #[error("mask selects no nodes")]
    EmptyMask,
    #[error("gradient tape was already consumed")]
    TapeConsumed,
    #[error("out of scope: {0}")]
    Scope(String),
    #[error("training diverged at epoch {epoch}: {source}")]
    Training {
        epoch: usize,
        #[source]
        source: alloc::boxed::Box<GescError>,
    },
}

pub type Result<T, E = GescError> = core::result::Result<T, E>;
