use serde::{Deserialize, Serialize};

use super::{ModelError, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerRule {
    Sgd,
    Adamw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub rule: OptimizerRule,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { rule: OptimizerRule::Sgd, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub step_count: u64,
    /// First and second moments; empty for SGD.
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, n_params: usize) -> Self {
        let n = if config.rule == OptimizerRule::Adamw { n_params } else { 0 };
        Self { config, step_count: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    /// In-place update of `params` by `grad`.
    ///
    /// SGD: `θ ← θ − lr·g`.
    /// AdamW: `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`,
    /// `θ ← θ − lr·(m̂ / (√v̂ + ε) + λθ)` with `m̂ = m/(1−β₁ᵗ)`, `v̂ = v/(1−β₂ᵗ)`.
    pub fn apply(&mut self, params: &mut ModelParams, grad: &ModelParams, lr: f64) -> Result<(), ModelError> {
        params.same_shape(grad)?;
        let c = &self.config;
        match c.rule {
            OptimizerRule::Sgd => {
                for (p, g) in params.values.iter_mut().zip(&grad.values) {
                    *p -= lr * g;
                }
            }
            OptimizerRule::Adamw => {
                if self.m.len() != params.values.len() || self.v.len() != params.values.len() {
                    return Err(ModelError::ShapeError("optimizer moments do not match parameters".into()));
                }
                let t = (self.step_count + 1) as i32;
                let bc1 = 1.0 - c.beta1.powi(t);
                let bc2 = 1.0 - c.beta2.powi(t);
                for i in 0..params.values.len() {
                    let g = grad.values[i];
                    let m = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
                    let v = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
                    self.m[i] = m;
                    self.v[i] = v;
                    let update = (m / bc1) / ((v / bc2).sqrt() + c.eps) + c.weight_decay * params.values[i];
                    params.values[i] -= lr * update;
                }
            }
        }
        self.step_count += 1;
        Ok(())
    }
}

/// Pure form of [`OptimizerState::apply`].
pub fn optimizer_step(
    params: &ModelParams,
    grad: &ModelParams,
    state: &OptimizerState,
    lr: f64,
) -> Result<(ModelParams, OptimizerState), ModelError> {
    let mut p = params.clone();
    let mut s = state.clone();
    s.apply(&mut p, grad, lr)?;
    Ok((p, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(vals: &[f64]) -> ModelParams {
        // dim 2, classes 2, linear: 4 weights + 2 biases.
        ModelParams { dim: 2, classes: 2, hidden: None, values: vals.to_vec() }
    }

    fn adamw(wd: f64) -> OptimizerConfig {
        OptimizerConfig { rule: OptimizerRule::Adamw, weight_decay: wd, ..Default::default() }
    }

    #[test]
    fn sgd_exact() {
        let p = params(&[1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
        let g = params(&[0.5, 0.5, -1.0, 2.0, 0.0, 1.0]);
        let s = OptimizerState::new(OptimizerConfig::default(), 6);
        let (p2, s2) = optimizer_step(&p, &g, &s, 0.1).unwrap();
        for i in 0..6 {
            assert_eq!(p2.values[i], p.values[i] - 0.1 * g.values[i]);
        }
        assert_eq!(s2.step_count, 1);
    }

    #[test]
    fn zero_grad_and_zero_lr_leave_params() {
        let p = params(&[1.0, -2.0, 0.5, 0.25, 3.0, -1.0]);
        let z = ModelParams::zeros_like(&p);
        let g = params(&[0.3, 0.1, -0.2, 0.4, 0.5, -0.6]);
        let sgd = OptimizerState::new(OptimizerConfig::default(), 6);
        assert_eq!(optimizer_step(&p, &z, &sgd, 0.7).unwrap().0, p);
        assert_eq!(optimizer_step(&p, &g, &sgd, 0.0).unwrap().0, p);
        let ad = OptimizerState::new(adamw(0.0), 6);
        assert_eq!(optimizer_step(&p, &g, &ad, 0.0).unwrap().0, p);
    }

    #[test]
    fn adamw_first_step_closed_form() {
        let p = params(&[1.0, -2.0, 0.5, 0.25, 3.0, -1.0]);
        let g = params(&[0.3, 0.1, -0.2, 0.4, 0.0, -0.6]);
        let (lr, wd) = (0.01, 0.05);
        let s = OptimizerState::new(adamw(wd), 6);
        let (p2, s2) = optimizer_step(&p, &g, &s, lr).unwrap();
        for i in 0..6 {
            // From zero moments: m̂ = g, v̂ = g², so the step is g / (|g| + ε).
            let gi = g.values[i];
            let m = 0.1 * gi;
            let v = 0.001 * gi * gi;
            let mhat = m / (1.0 - 0.9);
            let vhat = v / (1.0 - 0.999);
            let want = p.values[i] - lr * (mhat / (vhat.sqrt() + 1e-8) + wd * p.values[i]);
            assert!((p2.values[i] - want).abs() <= 1e-12, "coord {i}");
            assert!((p2.values[i] - (p.values[i] - lr * (gi / (gi.abs() + 1e-8) + wd * p.values[i]))).abs() < 1e-12);
        }
        assert_eq!(s2.step_count, 1);
        assert!((s2.m[0] - 0.03).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let p = params(&[0.0; 6]);
        let g = ModelParams::zeros(3, 2, None);
        let s = OptimizerState::new(OptimizerConfig::default(), 6);
        assert!(matches!(optimizer_step(&p, &g, &s, 0.1), Err(ModelError::ShapeError(_))));
        let bad = OptimizerState::new(adamw(0.0), 5);
        assert!(matches!(optimizer_step(&p, &p, &bad, 0.1), Err(ModelError::ShapeError(_))));
    }
}
