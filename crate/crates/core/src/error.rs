use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: no parseable numeric rows")]
    NoData { path: PathBuf },

    #[error("{path}: non-finite value at row {row}")]
    NonFinite { path: PathBuf, row: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("bad artifact header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("series of length {len} is shorter than window length {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),

    #[error("degenerate split: {n_train} train / {n_eval} eval windows")]
    DegenerateSplit { n_train: usize, n_eval: usize },

    #[error("need at least {needed} distinct values to fit {needed} quantile states, found {found}")]
    TooFewDistinct { needed: usize, found: usize },

    #[error("state sequence of length {0} has no transitions")]
    SequenceTooShort(usize),

    #[error("row {row} has norm below 1e-12 in l2 normalization")]
    NearZeroRow { row: usize },

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite value produced by {0}")]
    NonFiniteValue(&'static str),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
