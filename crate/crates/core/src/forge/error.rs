use thiserror::Error;

use super::client::ClientError;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("few-shot meta-prompt requires an example format")]
    MissingExample,
    #[error("generator returned empty text")]
    EmptyGeneration,
    #[error("no templates found in generated text")]
    NoTemplatesFound,
    #[error("partition would leave a split empty ({total} templates, weights {train_weight}:{test_weight})")]
    DegeneratePartition { total: usize, train_weight: u32, test_weight: u32 },
    #[error("template body is empty")]
    EmptyBody,
    #[error("duplicate template {0:?}")]
    DuplicateTemplate(String),
    #[error("train and test splits overlap on template {0:?}")]
    SplitOverlap(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed prompt-set file: {0}")]
    Json(#[from] serde_json::Error),
}
