//! Distances between prompt distributions.
//!
//! Prompts are embedded as L2-normalised hashed n-gram vectors of their
//! bodies (placeholders replaced by their field names). Two prompt sets are
//! then compared with the maximum mean discrepancy under an RBF or linear
//! kernel.

mod embed;
mod estimate;
mod scaling;

use thiserror::Error;

pub use embed::{embed_prompt, embed_prompts, PromptEmbedding, EMBED_DIM};
pub use estimate::{
    disc_upper_bound, gram, median_bandwidth, mmd, mmd2, DiscBound, Estimator, Kernel, MmdEstimate,
};
pub use scaling::{curve_to_csv, scaling_curve, ScalingPoint};

#[derive(Debug, Error)]
pub enum MmdError {
    #[error("vectors have different lengths ({0} vs {1})")]
    ShapeError(usize, usize),
    #[error("{estimator} estimator needs at least {needed} samples per side, got {got}")]
    TooFewSamples { estimator: &'static str, needed: usize, got: usize },
    #[error("invalid subset size {size} for a pool of {pool}")]
    InvalidSize { size: usize, pool: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
