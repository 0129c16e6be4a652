use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("steps_per_prompt must be at least 1")]
    ZeroSteps,
    #[error("learning rate must be positive and finite, got {0}")]
    BadLearningRate(f64),
    #[error("batch_size must be at least 1")]
    ZeroBatch,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    /// Number of epochs; 0 is a no-op.
    pub epochs: usize,
    /// Steps with the same prompt before a fresh draw (`K`).
    pub steps_per_prompt: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle_data: bool,
    pub batch_size: usize,
    /// Overrides the prompt stream seed derived from `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_seed: Option<u64>,
    /// Overrides the data stream seed derived from `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            epochs: 3,
            steps_per_prompt: 4,
            learning_rate: 0.1,
            seed: 0,
            shuffle_data: true,
            batch_size: 1,
            prompt_seed: None,
            data_seed: None,
        }
    }
}

impl TrainPlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.steps_per_prompt == 0 {
            return Err(PlanError::ZeroSteps);
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(PlanError::BadLearningRate(self.learning_rate));
        }
        if self.batch_size == 0 {
            return Err(PlanError::ZeroBatch);
        }
        Ok(())
    }

    pub fn prompt_stream_seed(&self) -> u64 {
        self.prompt_seed.unwrap_or_else(|| rng::derive_seed("paft/prompt", self.seed))
    }

    pub fn data_stream_seed(&self) -> u64 {
        self.data_seed.unwrap_or_else(|| rng::derive_seed("paft/data", self.seed))
    }

    pub fn steps_per_epoch(&self, n_examples: usize) -> usize {
        n_examples.div_ceil(self.batch_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TrainPlan::default().validate().is_ok());
        assert_eq!(TrainPlan { steps_per_prompt: 0, ..Default::default() }.validate(), Err(PlanError::ZeroSteps));
        assert!(TrainPlan { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainPlan { learning_rate: f64::NAN, ..Default::default() }.validate().is_err());
        assert_eq!(TrainPlan { batch_size: 0, ..Default::default() }.validate(), Err(PlanError::ZeroBatch));
        assert!(TrainPlan { epochs: 0, ..Default::default() }.validate().is_ok());
    }

    #[test]
    fn stream_seeds_are_separated() {
        let p = TrainPlan::default();
        assert_ne!(p.prompt_stream_seed(), p.data_stream_seed());
        let q = TrainPlan { prompt_seed: Some(5), ..p.clone() };
        assert_eq!(q.prompt_stream_seed(), 5);
        assert_eq!(q.data_stream_seed(), p.data_stream_seed());
    }

    #[test]
    fn steps_round_up() {
        let p = TrainPlan { batch_size: 3, ..Default::default() };
        assert_eq!(p.steps_per_epoch(10), 4);
        assert_eq!(p.steps_per_epoch(9), 3);
    }
}
