use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window ending at t={t} needs W={window} rows but the series has L={len} rows")]
    WindowOutOfRange { t: usize, window: usize, len: usize },

    #[error("history underflow: {what} needs {required} rows of history before t={t}")]
    HistoryUnderflow {
        what: &'static str,
        t: usize,
        required: usize,
    },

    #[error("invalid change target (t1={t1}, t2={t2}): {reason}")]
    InvalidTarget {
        t1: usize,
        t2: usize,
        reason: String,
    },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("kernel matrix is not positive definite even after jitter")]
    NotPositiveDefinite,

    #[error("K={k} is out of range for {cells} attribution cells")]
    KOutOfRange { k: usize, cells: usize },

    #[error("coordinate ({t}, {d}) outside a {rows}x{cols} input")]
    CoordinateOutOfRange {
        t: usize,
        d: usize,
        rows: usize,
        cols: usize,
    },

    #[error("sample {sample}: {source}")]
    Sample {
        sample: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown method {0:?} (expected one of swing, rbs, ig-zero, occlusion, random)")]
    UnknownMethod(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
