//! Differentiable binary classifiers on feature vectors.
//!
//! A predictor is a stack of dense layers `input -> hidden... -> 1` with ReLU
//! between layers; logistic regression is the case with no hidden layers.
//! Everything is `f64`.

mod checkpoint;
mod loss;
mod net;
mod optim;
mod params;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use loss::{bce_with_logits, sigmoid};
pub use net::{backward, forward_logits, init_params, predict_proba, Batch};
pub use optim::{adamw_step, AdamWConfig, OptimizerState};
pub use params::{ParamBlock, ParamVector};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub input_dim: usize,
    #[serde(default)]
    pub hidden_sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    /// Multiplier on the fan-in initialization bound.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_init_scale() -> f64 {
    1.0
}

impl PredictorSpec {
    pub fn logistic(input_dim: usize) -> Self {
        Self {
            kind: PredictorKind::Logistic,
            input_dim,
            hidden_sizes: Vec::new(),
            activation: Activation::Relu,
            init_scale: 1.0,
        }
    }

    pub fn mlp(input_dim: usize, hidden_sizes: Vec<usize>) -> Self {
        Self {
            kind: PredictorKind::Mlp,
            input_dim,
            hidden_sizes,
            activation: Activation::Relu,
            init_scale: 1.0,
        }
    }

    pub fn with_init_scale(mut self, init_scale: f64) -> Self {
        self.init_scale = init_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidConfig("init_scale must be finite and >= 0".into()));
        }
        if self.input_dim < 1 {
            return Err(Error::InvalidConfig("input_dim must be >= 1".into()));
        }
        match self.kind {
            PredictorKind::Logistic if !self.hidden_sizes.is_empty() => Err(Error::InvalidConfig(
                "logistic predictor takes no hidden layers".into(),
            )),
            PredictorKind::Mlp if self.hidden_sizes.is_empty() => Err(Error::InvalidConfig(
                "mlp predictor needs at least one hidden layer".into(),
            )),
            _ if self.hidden_sizes.contains(&0) => {
                Err(Error::InvalidConfig("hidden sizes must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Widths of every layer including input and the single output logit.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(self.input_dim);
        sizes.extend(&self.hidden_sizes);
        sizes.push(1);
        sizes
    }

    pub fn n_params(&self) -> usize {
        self.layer_sizes().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}
