use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::EvalReport;
use super::EvalError;
use crate::forge::{validate_template, PromptTemplate};
use crate::sched::Predictor;
use crate::stats;
use crate::task::{render, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptEvalRow {
    pub prompt_id: String,
    pub n_correct: usize,
    pub n_total: usize,
    pub accuracy: f64,
}

impl PromptEvalRow {
    pub fn new(prompt_id: impl Into<String>, n_correct: usize, n_total: usize) -> Self {
        assert!(n_total >= 1 && n_correct <= n_total, "invalid counts {n_correct}/{n_total}");
        Self { prompt_id: prompt_id.into(), n_correct, n_total, accuracy: n_correct as f64 / n_total as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single row.
    pub std: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    pub top_threshold: f64,
    /// Fraction of rows with accuracy ≥ `top_threshold`.
    pub top_fraction: f64,
}

pub fn summarize(rows: &[PromptEvalRow], top_threshold: f64) -> Result<Summary, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyRows);
    }
    if !(0.0..=1.0).contains(&top_threshold) {
        return Err(EvalError::InvalidArgument(format!("top threshold {top_threshold} outside [0, 1]")));
    }
    let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
    let top = acc.iter().filter(|&&a| a >= top_threshold).count();
    Ok(Summary {
        mean: stats::mean(&acc),
        std: stats::sample_std(&acc),
        min_accuracy: acc.iter().copied().fold(f64::INFINITY, f64::min),
        max_accuracy: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        top_threshold,
        top_fraction: top as f64 / rows.len() as f64,
    })
}

fn score_prompt<P: Predictor>(model: &P, dataset: &Dataset, t: &PromptTemplate) -> Result<PromptEvalRow, EvalError> {
    let mut correct = 0;
    for x in &dataset.instances {
        let ex = render(t, x).map_err(|source| EvalError::Render { prompt_id: t.id.clone(), source })?;
        if model.predict(&ex) == ex.gold {
            correct += 1;
        }
    }
    Ok(PromptEvalRow::new(t.id.clone(), correct, dataset.len()))
}

fn check_inputs(dataset: &Dataset, prompts: &[PromptTemplate]) -> Result<(), EvalError> {
    if prompts.is_empty() {
        return Err(EvalError::EmptyPromptSet);
    }
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut ids = HashSet::new();
    for t in prompts {
        let v = validate_template(t, &dataset.schema);
        if !v.is_ok() {
            return Err(EvalError::InvalidTemplate(v.to_string()));
        }
        if !ids.insert(&t.id) {
            return Err(EvalError::InvalidArgument(format!("duplicate prompt id {:?}", t.id)));
        }
    }
    Ok(())
}

/// Per-prompt rows for `prompts`, sorted by prompt id. Runs on the global rayon pool.
pub fn evaluate_rows<P: Predictor + Sync>(
    model: &P,
    dataset: &Dataset,
    prompts: &[PromptTemplate],
) -> Result<Vec<PromptEvalRow>, EvalError> {
    check_inputs(dataset, prompts)?;
    let mut rows = prompts
        .par_iter()
        .map(|t| score_prompt(model, dataset, t))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
    Ok(rows)
}

/// Scores every prompt over the full dataset and summarises the distribution.
pub fn evaluate_prompt_set<P: Predictor + Sync>(
    model: &P,
    dataset: &Dataset,
    prompts: &[PromptTemplate],
    top_threshold: f64,
) -> Result<EvalReport, EvalError> {
    let rows = evaluate_rows(model, dataset, prompts)?;
    EvalReport::from_rows(rows, top_threshold)
}

/// As [`evaluate_prompt_set`], on a dedicated pool of `workers` threads.
pub fn evaluate_prompt_set_with_workers<P: Predictor + Sync>(
    model: &P,
    dataset: &Dataset,
    prompts: &[PromptTemplate],
    top_threshold: f64,
    workers: usize,
) -> Result<EvalReport, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::InvalidArgument(e.to_string()))?;
    pool.install(|| evaluate_prompt_set(model, dataset, prompts, top_threshold))
}

/// Macro mean of per-prompt accuracy over the adversarial prompts.
pub fn conditional_accuracy<P: Predictor + Sync>(
    model: &P,
    dataset: &Dataset,
    adversarial_prompts: &[PromptTemplate],
) -> Result<f64, EvalError> {
    let rows = evaluate_rows(model, dataset, adversarial_prompts)?;
    Ok(summarize(&rows, 0.0)?.mean)
}
