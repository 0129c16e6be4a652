//! Hashed character n-gram softmax classifier.

mod classifier;
mod features;
mod optim;
mod params;

use thiserror::Error;

pub use classifier::{FeatureNorm, HashedTextClassifier, ModelConfig};
pub use features::{featurize, fnv1a64, sparse_features, FeatureVector, SparseFeatures};
pub use optim::{optimizer_step, OptimizerConfig, OptimizerRule, OptimizerState};
pub use params::{ModelParams, PARAMS_FORMAT};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("label {0:?} is not in the model's label space")]
    UnknownLabel(String),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint digest mismatch (stored {stored}, computed {computed})")]
    DigestMismatch { stored: String, computed: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
}
