//! Prompt-agnostic fine-tuning (PAFT) at desk scale.
//!
//! The crate is organised along the pipeline:
//!
//! - [`forge`]: candidate prompt synthesis, parsing, dedup and train/test partitioning.
//! - [`task`]: task schemas, synthetic datasets and template rendering.
//! - [`sched`]: the dynamic prompt schedule and the training loop driving any
//!   [`sched::TrainableModel`].
//! - [`model`]: a hashed character n-gram softmax classifier with SGD / AdamW.
//! - [`eval`]: per-prompt accuracy, robustness summaries, adversarial perturbations, reports.
//! - [`mmd`]: prompt embeddings, kernels, maximum mean discrepancy and the
//!   prompt-count scaling curve.
//! - [`experiment`]: ablation grids and prompt-count scaling runs.

pub mod eval;
pub mod experiment;
pub mod forge;
pub mod mmd;
pub mod model;
pub mod rng;
pub mod sched;
pub mod stats;
pub mod task;

pub use eval::{EvalReport, PerturbOp, PerturbSpec, PromptEvalRow, Summary};
pub use forge::{MetaPrompt, PromptSet, PromptTemplate, Split, Strategy};
pub use mmd::{Estimator, Kernel, MmdEstimate, PromptEmbedding};
pub use model::{HashedTextClassifier, ModelConfig, ModelParams, OptimizerRule};
pub use sched::{ScheduleEvent, TrainPlan, TrainTrace, TrainableModel};
pub use task::{Dataset, RenderedExample, TaskInstance, TaskSchema};
