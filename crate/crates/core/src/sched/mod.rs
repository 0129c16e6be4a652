//! Dynamic prompt scheduling and the fine-tuning loop.
//!
//! A prompt is drawn uniformly (with replacement) at the start of every epoch
//! and again after every step whose 1-based step counter is a multiple of `K`.
//! Prompt draws and data shuffling use separate seeded streams, so changing
//! `K` never changes which data points a step sees.

mod plan;
mod schedule;
mod train;

pub use plan::{PlanError, TrainPlan};
pub use schedule::{build_schedule, ScheduleEvent};
pub use train::{
    train_fixed, train_paft, train_with_templates, Predictor, StepRecord, TrainError, TrainTrace,
    TrainableModel,
};
