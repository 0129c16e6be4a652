use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError, Workbench};
use crate::stats::{mean, round_sig};

/// Values of `K` (steps per prompt) and `T` (epochs) to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub k_values: Vec<usize>,
    pub t_values: Vec<usize>,
    pub n_seeds: usize,
    /// Extra `(K, T)` cells outside the product.
    #[serde(default)]
    pub extra_cells: Vec<(usize, usize)>,
}

impl AblationGrid {
    pub fn new(k_values: Vec<usize>, t_values: Vec<usize>, n_seeds: usize) -> Self {
        Self { k_values, t_values, n_seeds, extra_cells: Vec::new() }
    }

    /// `K ∈ {1, 2, 4, 8}` at `T = 3`, plus `K = 1, T = 6`.
    pub fn standard(n_seeds: usize) -> Self {
        Self { extra_cells: vec![(1, 6)], ..Self::new(vec![1, 2, 4, 8], vec![3], n_seeds) }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.k_values.is_empty() || self.t_values.is_empty() {
            return Err(ExperimentError::InvalidGrid("K and T lists must be non-empty".into()));
        }
        if self.n_seeds == 0 {
            return Err(ExperimentError::InvalidGrid("need at least one seed".into()));
        }
        let all = self.k_values.iter().chain(&self.t_values).chain(self.extra_cells.iter().flat_map(|(k, t)| [k, t]));
        if all.into_iter().any(|&v| v == 0) {
            return Err(ExperimentError::InvalidGrid("K and T must be at least 1".into()));
        }
        Ok(())
    }

    /// Cells in row-major order (T outer, K inner), then extras; duplicates dropped.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        let product = self.t_values.iter().flat_map(|&t| self.k_values.iter().map(move |&k| (k, t)));
        for c in product.chain(self.extra_cells.iter().copied()) {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub k: usize,
    pub t: usize,
    /// Mean over seeds of the mean accuracy across test prompts.
    pub mean: f64,
    /// Mean over seeds of the std of accuracy across test prompts.
    pub std: f64,
    pub seed_means: Vec<f64>,
    pub seed_stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub cells: Vec<AblationCell>,
}

impl AblationResult {
    /// Mean of the cell means.
    pub fn grid_mean(&self) -> f64 {
        mean(&self.cells.iter().map(|c| c.mean).collect::<Vec<_>>())
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| K | T | Mean | Std |\n|---:|---:|---:|---:|\n");
        for c in &self.cells {
            out.push_str(&format!("| {} | {} | {:.2} | {:.2} |\n", c.k, c.t, 100.0 * c.mean, 100.0 * c.std));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t,mean,std\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{}\n", c.k, c.t, round_sig(c.mean, 12), round_sig(c.std, 12)));
        }
        out
    }
}

/// For each cell and seed: PAFT training with that `K` and `T`, then evaluation
/// on the unseen test prompts. Seeds are `config.seed, config.seed + 1, …`.
pub fn run_ablation(config: &ExperimentConfig, grid: &AblationGrid) -> Result<AblationResult, ExperimentError> {
    grid.validate()?;
    let seeds: Vec<u64> = (0..grid.n_seeds as u64).map(|i| config.seed + i).collect();
    let benches = seeds
        .par_iter()
        .map(|&s| Workbench::synthetic(config, s))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..benches.len()).map(move |b| (c, b))).collect();
    let results = jobs
        .par_iter()
        .map(|&(c, b)| {
            let (k, t) = cells[c];
            let wb = &benches[b];
            let run = || -> Result<(f64, f64), ExperimentError> {
                let (model, _) = wb.train_on(&wb.train_prompts(), Some(k), Some(t))?;
                let s = wb.evaluate(&model)?.summary;
                Ok((s.mean, s.std))
            };
            run().map_err(|e| ExperimentError::Cell { k, t, seed: wb.seed, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cells = cells
        .iter()
        .enumerate()
        .map(|(c, &(k, t))| {
            let per = &results[c * benches.len()..(c + 1) * benches.len()];
            let seed_means: Vec<f64> = per.iter().map(|r| r.0).collect();
            let seed_stds: Vec<f64> = per.iter().map(|r| r.1).collect();
            AblationCell { k, t, mean: mean(&seed_means), std: mean(&seed_stds), seed_means, seed_stds }
        })
        .collect();
    Ok(AblationResult { cells })
}
