use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError, Workbench};
use crate::rng::stream_multi;
use crate::stats::{mean, round_sig};

/// One seed at one prompt count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingObservation {
    pub n_prompts: usize,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
}

/// Seed-averaged mean and std of test-prompt accuracy at one prompt count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_prompts: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub rows: Vec<ScalingRow>,
    pub observations: Vec<ScalingObservation>,
}

impl ScalingResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_prompts,mean,std\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.n_prompts, round_sig(r.mean, 12), round_sig(r.std, 12)));
        }
        out
    }
}

/// The seeded subset of `n` training prompts used by [`run_scaling`].
pub fn subsample_indices(pool: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_multi("experiment/scaling", &[seed, n as u64]);
    let mut idx = sample(&mut rng, pool, n).into_vec();
    idx.sort_unstable();
    idx
}

/// For each prompt count: PAFT on a seeded subset of that many training
/// prompts, evaluated on the same unseen test prompts.
pub fn run_scaling(
    config: &ExperimentConfig,
    prompt_counts: &[usize],
    n_seeds: usize,
) -> Result<ScalingResult, ExperimentError> {
    if prompt_counts.is_empty() || n_seeds == 0 {
        return Err(ExperimentError::InvalidArgument("need at least one prompt count and one seed".into()));
    }
    if prompt_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::InvalidArgument("prompt counts must be strictly ascending".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| config.seed + i).collect();
    let benches = seeds
        .par_iter()
        .map(|&s| Workbench::synthetic(config, s))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = benches.iter().map(|b| b.train_prompts().len()).min().unwrap_or(0);
    if let Some(&size) = prompt_counts.iter().find(|&&n| n == 0 || n > pool) {
        return Err(ExperimentError::InvalidSize { size, pool });
    }
    let jobs: Vec<(usize, usize)> =
        prompt_counts.iter().flat_map(|&n| (0..benches.len()).map(move |b| (n, b))).collect();
    let observations = jobs
        .par_iter()
        .map(|&(n, b)| {
            let wb = &benches[b];
            let train = wb.train_prompts();
            let subset: Vec<_> = subsample_indices(train.len(), n, wb.seed).into_iter().map(|i| train[i].clone()).collect();
            let (model, _) = wb.train_on(&subset, None, None)?;
            let s = wb.evaluate(&model)?.summary;
            Ok(ScalingObservation { n_prompts: n, seed: wb.seed, mean: s.mean, std: s.std })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let rows = prompt_counts
        .iter()
        .map(|&n| {
            let obs: Vec<&ScalingObservation> = observations.iter().filter(|o| o.n_prompts == n).collect();
            ScalingRow {
                n_prompts: n,
                mean: mean(&obs.iter().map(|o| o.mean).collect::<Vec<_>>()),
                std: mean(&obs.iter().map(|o| o.std).collect::<Vec<_>>()),
            }
        })
        .collect();
    Ok(ScalingResult { rows, observations })
}
