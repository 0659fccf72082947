use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("index {index} out of range for {what} (size {size})")]
    Index {
        what: &'static str,
        index: i64,
        size: usize,
    },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite loss on document `{doc_id}` (epoch {epoch}): {detail}")]
    Divergence {
        doc_id: String,
        epoch: usize,
        detail: String,
    },

    #[error("loss closure is not deterministic: {first} then {second}")]
    Determinism { first: f64, second: f64 },

    #[error("incompatible checkpoint: {0}")]
    Compatibility(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(op: &'static str, left: impl ToString, right: impl ToString) -> Error {
    Error::Shape {
        op,
        left: left.to_string(),
        right: right.to_string(),
    }
}
