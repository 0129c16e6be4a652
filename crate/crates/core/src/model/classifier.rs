use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{sparse_features, SparseFeatures};
use super::optim::{OptimizerConfig, OptimizerState};
use super::params::{ModelParams, PARAMS_FORMAT};
use super::ModelError;
use crate::rng;
use crate::sched::{Predictor, TrainableModel};
use crate::task::RenderedExample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureNorm {
    /// Raw n-gram counts.
    Counts,
    /// Counts scaled to unit L2 norm.
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub ngram_sizes: Vec<usize>,
    /// Width of the optional tanh hidden layer.
    pub hidden: Option<usize>,
    pub feature_norm: FeatureNorm,
    pub optimizer: OptimizerConfig,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 1 << 14,
            ngram_sizes: vec![1, 2, 3],
            hidden: None,
            feature_norm: FeatureNorm::L2,
            optimizer: OptimizerConfig::default(),
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.dim.is_power_of_two() || self.dim > 1 << 24 {
            return Err(ModelError::InvalidConfig(format!("dim must be a power of two ≤ 2^24, got {}", self.dim)));
        }
        if self.ngram_sizes.is_empty() || self.ngram_sizes.iter().any(|n| !(1..=5).contains(n)) {
            return Err(ModelError::InvalidConfig("n-gram sizes must be a non-empty subset of 1..=5".into()));
        }
        if self.hidden == Some(0) {
            return Err(ModelError::InvalidConfig("hidden width must be positive".into()));
        }
        Ok(())
    }
}

/// Linear (or one-hidden-layer) softmax classifier over hashed character n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedTextClassifier {
    config: ModelConfig,
    labels: Vec<String>,
    params: ModelParams,
    optimizer: OptimizerState,
}

/// Intermediate values of one forward pass.
struct Forward {
    x: SparseFeatures,
    hidden: Vec<f64>,
    probs: Vec<f64>,
    log_norm: f64,
    logits: Vec<f64>,
}

impl HashedTextClassifier {
    /// Weights ~ U(−0.05, 0.05) from `config.init_seed`; biases zero.
    pub fn new(config: ModelConfig, labels: Vec<String>) -> Result<Self, ModelError> {
        config.validate()?;
        if labels.len() < 2 {
            return Err(ModelError::InvalidConfig("need at least two labels".into()));
        }
        let mut params = ModelParams::zeros(config.dim, labels.len(), config.hidden);
        let [w1, b1, w2, b2] = params.offsets();
        let mut r = rng::stream("model/init", config.init_seed);
        let mut fill = |range: std::ops::Range<usize>, values: &mut [f64]| {
            for v in &mut values[range] {
                *v = r.gen_range(-0.05..0.05);
            }
        };
        if config.hidden.is_some() {
            fill(w1..b1, &mut params.values);
            fill(w2..b2, &mut params.values);
        } else {
            fill(w1..b1, &mut params.values);
        }
        let optimizer = OptimizerState::new(config.optimizer.clone(), params.values.len());
        Ok(Self { config, labels, params, optimizer })
    }

    /// Wraps existing parameters (e.g. all zeros) with a fresh optimizer.
    pub fn from_params(config: ModelConfig, labels: Vec<String>, params: ModelParams) -> Result<Self, ModelError> {
        config.validate()?;
        params.check()?;
        if params.dim != config.dim || params.classes != labels.len() || params.hidden != config.hidden {
            return Err(ModelError::ShapeError("parameters do not match config".into()));
        }
        let optimizer = OptimizerState::new(config.optimizer.clone(), params.values.len());
        Ok(Self { config, labels, params, optimizer })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    pub fn optimizer(&self) -> &OptimizerState {
        &self.optimizer
    }

    pub fn features(&self, text: &str) -> SparseFeatures {
        let mut x = sparse_features(text, self.config.dim, &self.config.ngram_sizes);
        if self.config.feature_norm == FeatureNorm::L2 {
            let norm = x.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                x.iter_mut().for_each(|(_, v)| *v /= norm);
            }
        }
        x
    }

    fn forward(&self, params: &ModelParams, text: &str) -> Forward {
        let x = self.features(text);
        let c = params.classes;
        let [w1, b1, w2, b2] = params.offsets();
        let p = &params.values;
        let hidden = match params.hidden {
            None => Vec::new(),
            Some(h) => {
                let mut pre = p[b1..b1 + h].to_vec();
                for &(i, v) in &x {
                    let row = w1 + i as usize * h;
                    for (k, a) in pre.iter_mut().enumerate() {
                        *a += v * p[row + k];
                    }
                }
                pre.iter().map(|a| a.tanh()).collect()
            }
        };
        let mut logits = p[b2..b2 + c].to_vec();
        let inputs: Vec<(usize, f64)> = if params.hidden.is_some() {
            hidden.iter().copied().enumerate().collect()
        } else {
            x.iter().map(|&(i, v)| (i as usize, v)).collect()
        };
        for (i, v) in inputs {
            let row = w2 + i * c;
            for (j, z) in logits.iter_mut().enumerate() {
                *z += v * p[row + j];
            }
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let probs = exps.iter().map(|e| e / sum).collect();
        Forward { x, hidden, probs, log_norm: max + sum.ln(), logits }
    }

    /// Softmax class probabilities.
    pub fn probabilities(&self, text: &str) -> Vec<f64> {
        self.forward(&self.params, text).probs
    }

    pub fn logits(&self, text: &str) -> Vec<f64> {
        self.forward(&self.params, text).logits
    }

    /// Mean cross-entropy and its gradient at arbitrary `params`.
    pub fn loss_and_grad_at(&self, params: &ModelParams, batch: &[RenderedExample]) -> Result<(f64, ModelParams), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let m = batch.len() as f64;
        let c = params.classes;
        let [w1, b1, w2, b2] = params.offsets();
        let mut grad = ModelParams::zeros_like(params);
        let mut loss = 0.0;
        for ex in batch {
            let gold = self
                .labels
                .iter()
                .position(|l| *l == ex.gold)
                .ok_or_else(|| ModelError::UnknownLabel(ex.gold.clone()))?;
            let f = self.forward(params, &ex.text);
            loss += f.log_norm - f.logits[gold];
            let mut dz = f.probs.clone();
            dz[gold] -= 1.0;
            dz.iter_mut().for_each(|d| *d /= m);
            let g = &mut grad.values;
            for j in 0..c {
                g[b2 + j] += dz[j];
            }
            match params.hidden {
                None => {
                    for &(i, v) in &f.x {
                        let row = w2 + i as usize * c;
                        for j in 0..c {
                            g[row + j] += v * dz[j];
                        }
                    }
                }
                Some(h) => {
                    let p = &params.values;
                    let mut dpre = vec![0.0; h];
                    for k in 0..h {
                        let row = w2 + k * c;
                        let mut da = 0.0;
                        for j in 0..c {
                            g[row + j] += f.hidden[k] * dz[j];
                            da += p[row + j] * dz[j];
                        }
                        dpre[k] = da * (1.0 - f.hidden[k] * f.hidden[k]);
                        g[b1 + k] += dpre[k];
                    }
                    for &(i, v) in &f.x {
                        let row = w1 + i as usize * h;
                        for k in 0..h {
                            g[row + k] += v * dpre[k];
                        }
                    }
                }
            }
        }
        Ok((loss / m, grad))
    }

    /// Writes a JSON checkpoint with shapes, row-major values and digest.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let ck = Checkpoint {
            format: PARAMS_FORMAT.to_string(),
            config: self.config.clone(),
            labels: self.labels.clone(),
            digest: self.params.digest(),
            params: self.params.clone(),
        };
        std::fs::write(path, serde_json::to_string(&ck)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.format != PARAMS_FORMAT {
            return Err(ModelError::InvalidConfig(format!("unsupported checkpoint format {:?}", ck.format)));
        }
        let computed = ck.params.digest();
        if computed != ck.digest {
            return Err(ModelError::DigestMismatch { stored: ck.digest, computed });
        }
        Self::from_params(ck.config, ck.labels, ck.params)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    config: ModelConfig,
    labels: Vec<String>,
    digest: String,
    params: ModelParams,
}

impl Predictor for HashedTextClassifier {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Argmax of the softmax output; ties go to the lowest index.
    fn predict_index(&self, text: &str) -> usize {
        let probs = self.probabilities(text);
        let mut best = 0;
        for (j, &p) in probs.iter().enumerate().skip(1) {
            if p > probs[best] {
                best = j;
            }
        }
        best
    }
}

impl TrainableModel for HashedTextClassifier {
    type Grad = ModelParams;
    type Error = ModelError;

    fn loss_and_grad(&self, batch: &[RenderedExample]) -> Result<(f64, ModelParams), ModelError> {
        self.loss_and_grad_at(&self.params, batch)
    }

    fn apply_update(&mut self, grad: &ModelParams, lr: f64) -> Result<(), ModelError> {
        self.optimizer.apply(&mut self.params, grad, lr)
    }

    fn digest(&self) -> String {
        self.params.digest()
    }
}
