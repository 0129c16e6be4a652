use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::plan::{PlanError, TrainPlan};
use super::schedule::build_schedule;
use crate::forge::{validate_template, PromptSet, PromptTemplate, Split};
use crate::rng;
use crate::task::{render, Dataset, RenderedExample, TaskError};

/// Read-only inference half of a model. Must be shareable across evaluation workers.
pub trait Predictor {
    fn labels(&self) -> &[String];

    /// Index into [`Predictor::labels`] of the predicted class.
    fn predict_index(&self, text: &str) -> usize;

    fn predict(&self, ex: &RenderedExample) -> &str {
        &self.labels()[self.predict_index(&ex.text)]
    }
}

/// Anything the training loop can drive with gradient steps.
pub trait TrainableModel: Predictor {
    type Grad;
    type Error: std::error::Error + Send + Sync + 'static;

    /// Mean loss over `batch` and its gradient with respect to the parameters.
    fn loss_and_grad(&self, batch: &[RenderedExample]) -> Result<(f64, Self::Grad), Self::Error>;

    /// One optimizer update with learning rate `lr`.
    fn apply_update(&mut self, grad: &Self::Grad, lr: f64) -> Result<(), Self::Error>;

    /// Stable content hash of the parameters.
    fn digest(&self) -> String;
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no training prompts")]
    EmptyPromptSet,
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("epoch {epoch}, step {step}: {source}")]
    Render { epoch: usize, step: usize, source: TaskError },
    #[error("epoch {epoch}, step {step}: model error: {source}")]
    Model { epoch: usize, step: usize, source: Box<dyn std::error::Error + Send + Sync> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub prompt_id: String,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
    /// Parameter digest after each epoch.
    pub epoch_digests: Vec<String>,
    pub param_digest: String,
}

#[derive(Serialize, Deserialize)]
struct DigestLine {
    param_digest: String,
}

impl TrainTrace {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    /// JSON lines: one `{epoch, step, prompt_id, loss}` per step, then `{param_digest}`.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            writeln!(s, "{}", serde_json::to_string(r).expect("record serializes")).expect("string write");
        }
        let last = DigestLine { param_digest: self.param_digest.clone() };
        writeln!(s, "{}", serde_json::to_string(&last).expect("digest serializes")).expect("string write");
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TrainError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let (last, body) = lines.split_last().ok_or_else(|| TrainError::Format("empty trace".into()))?;
        let records = body
            .iter()
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| TrainError::Format(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<StepRecord>, _>>()?;
        let d: DigestLine = serde_json::from_str(last).map_err(|e| TrainError::Format(format!("digest line: {e}")))?;
        Ok(Self { records, epoch_digests: Vec::new(), param_digest: d.param_digest })
    }

    pub fn write(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

/// Dynamic prompt fine-tuning over the train split of `prompts`.
pub fn train_paft<M: TrainableModel>(
    plan: &TrainPlan,
    dataset: &Dataset,
    prompts: &PromptSet,
    model: &mut M,
) -> Result<TrainTrace, TrainError> {
    let train = prompts.split_owned(Split::Train);
    train_with_templates(plan, dataset, &train, model)
}

/// Fixed-prompt fine-tuning: the same loop with a single template.
pub fn train_fixed<M: TrainableModel>(
    plan: &TrainPlan,
    dataset: &Dataset,
    template: &PromptTemplate,
    model: &mut M,
) -> Result<TrainTrace, TrainError> {
    train_with_templates(plan, dataset, std::slice::from_ref(template), model)
}

/// The training loop shared by [`train_paft`] and [`train_fixed`].
///
/// Each step takes the next `batch_size` examples of the (optionally shuffled)
/// dataset, renders them with the scheduled prompt, and applies one update.
/// Parameters carry over unchanged from one epoch to the next.
pub fn train_with_templates<M: TrainableModel>(
    plan: &TrainPlan,
    dataset: &Dataset,
    templates: &[PromptTemplate],
    model: &mut M,
) -> Result<TrainTrace, TrainError> {
    plan.validate()?;
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if templates.is_empty() {
        return Err(TrainError::EmptyPromptSet);
    }
    let mut by_id: HashMap<&str, &PromptTemplate> = HashMap::with_capacity(templates.len());
    for t in templates {
        let v = validate_template(t, &dataset.schema);
        if !v.is_ok() {
            return Err(TrainError::InvalidTemplate(v.to_string()));
        }
        if by_id.insert(t.id.as_str(), t).is_some() {
            return Err(TrainError::InvalidTemplate(format!("duplicate template id {:?}", t.id)));
        }
    }

    let n = dataset.len();
    let steps = plan.steps_per_epoch(n);
    let ids: Vec<String> = templates.iter().map(|t| t.id.clone()).collect();
    let schedule = build_schedule(plan, &ids, steps)?;

    let mut data_rng = rng::stream("sched/data", plan.data_stream_seed());
    let mut trace = TrainTrace { records: Vec::with_capacity(schedule.len()), ..Default::default() };
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch = Vec::with_capacity(plan.batch_size);

    for epoch_events in schedule.chunks(steps) {
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        if plan.shuffle_data {
            order.shuffle(&mut data_rng);
        }
        for ev in epoch_events {
            let template = by_id[ev.prompt_id.as_str()];
            let lo = ev.step * plan.batch_size;
            let hi = (lo + plan.batch_size).min(n);
            batch.clear();
            for &i in &order[lo..hi] {
                let ex = render(template, &dataset.instances[i])
                    .map_err(|source| TrainError::Render { epoch: ev.epoch, step: ev.step, source })?;
                batch.push(ex);
            }
            let wrap = |e: M::Error| TrainError::Model { epoch: ev.epoch, step: ev.step, source: Box::new(e) };
            let (loss, grad) = model.loss_and_grad(&batch).map_err(wrap)?;
            model.apply_update(&grad, plan.learning_rate).map_err(wrap)?;
            trace.records.push(StepRecord { epoch: ev.epoch, step: ev.step, prompt_id: ev.prompt_id.clone(), loss });
        }
        trace.epoch_digests.push(model.digest());
    }
    trace.param_digest = model.digest();
    Ok(trace)
}
