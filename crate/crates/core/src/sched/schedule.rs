use rand::Rng;
use serde::{Deserialize, Serialize};

use super::plan::TrainPlan;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEvent {
    pub epoch: usize,
    /// 0-based step within the epoch.
    pub step: usize,
    pub prompt_id: String,
}

/// Expands the prompt schedule for `plan.epochs` epochs of `steps_per_epoch` steps.
///
/// Per epoch: draw a prompt, reset `k = 0`; each step uses the current prompt,
/// then `k += 1` and, if `k % K == 0`, a new prompt is drawn. The draw after the
/// last step of an epoch is made even though the next epoch redraws, which
/// keeps the stream position a function of the step count alone.
///
/// Draws come from the ChaCha8 stream `rng::stream("sched/prompt", plan.prompt_stream_seed())`
/// via `gen_range(0..prompt_ids.len())`.
pub fn build_schedule(
    plan: &TrainPlan,
    prompt_ids: &[String],
    steps_per_epoch: usize,
) -> Result<Vec<ScheduleEvent>, super::TrainError> {
    if prompt_ids.is_empty() {
        return Err(super::TrainError::EmptyPromptSet);
    }
    if steps_per_epoch == 0 {
        return Err(super::TrainError::EmptyDataset);
    }
    plan.validate()?;
    let mut rng = rng::stream("sched/prompt", plan.prompt_stream_seed());
    let n = prompt_ids.len();
    let mut events = Vec::with_capacity(plan.epochs * steps_per_epoch);
    for epoch in 0..plan.epochs {
        let mut current = rng.gen_range(0..n);
        let mut k = 0usize;
        for step in 0..steps_per_epoch {
            events.push(ScheduleEvent { epoch, step, prompt_id: prompt_ids[current].clone() });
            k += 1;
            if k.is_multiple_of(plan.steps_per_prompt) {
                current = rng.gen_range(0..n);
            }
        }
    }
    Ok(events)
}
