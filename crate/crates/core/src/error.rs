use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dictionary line {line}: {reason}")]
    Dictionary { line: usize, reason: String },

    #[error("hatebase page {page}: {reason}")]
    HatebasePage { page: usize, reason: String },

    #[error("vocab line {line}: duplicate token {token:?} (first seen on line {first})")]
    DuplicateVocabToken { token: String, line: usize, first: usize },

    #[error("vocab is missing special token {0}")]
    MissingSpecialToken(&'static str),

    #[error("precomputed sequences line {line}: {reason}")]
    Precomputed { line: usize, reason: String },

    #[error("{source_name} row {row}: {reason}")]
    Dataset {
        source_name: String,
        row: usize,
        reason: String,
    },

    #[error("split: {0}")]
    Split(String),

    #[error("class weights: {0}")]
    ClassWeights(String),

    #[error("layer {layer}: expected input shape {expected}, got {actual:?}")]
    Shape {
        layer: String,
        expected: String,
        actual: Vec<usize>,
    },

    #[error("network state: {0}")]
    State(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch} (lr {lr})")]
    NonFiniteLoss { epoch: usize, batch: usize, lr: f64 },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
