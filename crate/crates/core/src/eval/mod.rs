//! Prompt-robustness evaluation.
//!
//! A model is scored once per prompt template over the whole dataset; the
//! per-prompt accuracies are then summarised as Mean, sample Std, Top (share
//! of prompts at or above a threshold), Min, and, over a set of perturbed
//! prompts, Conditional accuracy (macro mean).

mod bundle;
mod metrics;
mod perturb;
mod report;

use thiserror::Error;

use crate::task::TaskError;

pub use bundle::{ReportBundle, BUNDLE_FORMAT};
pub use metrics::{
    conditional_accuracy, evaluate_prompt_set, evaluate_prompt_set_with_workers, evaluate_rows, summarize, PromptEvalRow,
    Summary,
};
pub use perturb::{perturb_template, PerturbOp, PerturbSpec, MAX_PERTURB_ATTEMPTS};
pub use report::{EvalReport, REPORT_FORMAT};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no prompts to evaluate")]
    EmptyPromptSet,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no rows to summarize")]
    EmptyRows,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("prompt {prompt_id}: {source}")]
    Render { prompt_id: String, source: TaskError },
    #[error("could not perturb template {0} without damaging a placeholder")]
    PerturbFailed(String),
    #[error("malformed report: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
