use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::embed::PromptEmbedding;
use super::estimate::{mmd, Estimator, Kernel};
use super::MmdError;
use crate::rng::stream_multi;
use crate::stats::{mean, round_sig, sample_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub size: usize,
    pub mean_mmd: f64,
    /// Sample std over seeds; 0 for a single seed.
    pub std_mmd: f64,
    /// One MMD value per seed.
    pub values: Vec<f64>,
}

/// MMD between random `size`-subsets of `pool` and the full `test` set, for
/// each size, averaged over `n_seeds` draws. Subsets are drawn without
/// replacement from a stream keyed by (seed, size, draw).
pub fn scaling_curve(
    pool: &[PromptEmbedding],
    test: &[PromptEmbedding],
    sizes: &[usize],
    kernel: &Kernel,
    estimator: Estimator,
    n_seeds: usize,
    seed: u64,
) -> Result<Vec<ScalingPoint>, MmdError> {
    if n_seeds == 0 {
        return Err(MmdError::InvalidArgument("need at least one seed".into()));
    }
    if let Some(&size) = sizes.iter().find(|&&s| s == 0 || s > pool.len()) {
        return Err(MmdError::InvalidSize { size, pool: pool.len() });
    }
    let ys: Vec<&[f64]> = test.iter().map(|e| e.vector.as_slice()).collect();
    sizes
        .iter()
        .map(|&size| {
            let values = (0..n_seeds)
                .map(|s| {
                    let mut rng = stream_multi("mmd-scale", &[seed, size as u64, s as u64]);
                    let xs: Vec<&[f64]> =
                        sample(&mut rng, pool.len(), size).into_iter().map(|i| pool[i].vector.as_slice()).collect();
                    mmd(&xs, &ys, kernel, estimator).map(|e| e.value)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ScalingPoint { size, mean_mmd: mean(&values), std_mmd: sample_std(&values), values })
        })
        .collect()
}

/// `size,mean_mmd,std_mmd` with 12 significant digits.
pub fn curve_to_csv(points: &[ScalingPoint]) -> String {
    let mut out = String::from("size,mean_mmd,std_mmd\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.size, round_sig(p.mean_mmd, 12), round_sig(p.std_mmd, 12)));
    }
    out
}
