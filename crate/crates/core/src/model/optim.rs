use serde::{Deserialize, Serialize};

use super::ParamVector;
use crate::{Error, Result};

/// AdamW hyperparameters. Defaults: lr 1e-4, weight decay 1e-5 and the usual
/// Adam moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && self.weight_decay >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid optimizer settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(config: AdamWConfig, n_params: usize) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }
}

/// One AdamW update with decoupled weight decay:
///
/// `p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p`
///
/// The decay term uses the parameters from before the step.
pub fn adamw_step(state: &mut OptimizerState, params: &mut ParamVector, grad: &[f64]) -> Result<()> {
    if grad.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::Shape {
            expected: params.len(),
            actual: grad.len(),
        });
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("non-finite gradient at index {i}")));
    }
    let c = state.config;
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let bias1 = 1.0 - c.beta1.powi(t);
    let bias2 = 1.0 - c.beta2.powi(t);
    let values = params.values_mut();
    for i in 0..values.len() {
        let g = grad[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        let w = values[i];
        values[i] = w - c.lr * m_hat / (v_hat.sqrt() + c.epsilon) - c.lr * c.weight_decay * w;
    }
    Ok(())
}
