//! Local, Centralized and Federated training over one shared training loop.

mod fedavg;
mod federated;
mod train;

pub use fedavg::{fedavg_aggregate, weighted_average};
pub use federated::{run_federated, ClientFailurePolicy, FederatedRun, RoundConfig, RoundUpdates};
pub use train::{
    evaluate_loss_accuracy, train_centralized, train_epochs, train_local, EpochStats, LocalRun,
    TrainConfig,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::ParamVector;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    /// Local Learning: one model per client, own data only.
    #[serde(rename = "ll")]
    Local,
    /// Centralized Learning: one model on the pooled data.
    #[serde(rename = "cl")]
    Centralized,
    /// Federated Learning: FedAvg rounds.
    #[serde(rename = "fl")]
    Federated,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Local, Paradigm::Centralized, Paradigm::Federated];

    pub fn short(self) -> &'static str {
        match self {
            Paradigm::Local => "ll",
            Paradigm::Centralized => "cl",
            Paradigm::Federated => "fl",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Paradigm::Local => "LL",
            Paradigm::Centralized => "CL",
            Paradigm::Federated => "FL",
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

impl FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ll" | "local" => Ok(Paradigm::Local),
            "cl" | "centralized" => Ok(Paradigm::Centralized),
            "fl" | "federated" => Ok(Paradigm::Federated),
            other => Err(Error::InvalidConfig(format!("unknown paradigm {other:?}"))),
        }
    }
}

/// One point of a training curve. `step` is the 1-based epoch (LL/CL) or
/// round (FL); `client_id` is `None` for pooled/global rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub client_id: Option<u32>,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRunRecord {
    pub paradigm: Paradigm,
    pub points: Vec<CurvePoint>,
}

impl TrainingRunRecord {
    pub fn new(paradigm: Paradigm) -> Self {
        Self {
            paradigm,
            points: Vec::new(),
        }
    }

    pub fn extend_from(&mut self, client_id: Option<u32>, epochs: &[EpochStats]) {
        self.points.extend(epochs.iter().map(|e| CurvePoint {
            step: e.epoch + 1,
            client_id,
            train_loss: e.train_loss,
            val_loss: e.val_loss,
            val_accuracy: e.val_accuracy,
        }));
    }

    /// Curve rows for one client (or the pooled rows with `None`).
    pub fn curve(&self, client_id: Option<u32>) -> Vec<&CurvePoint> {
        self.points.iter().filter(|p| p.client_id == client_id).collect()
    }
}

/// What a client sends back after local training in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientUpdate {
    pub client_id: u32,
    pub params: ParamVector,
    /// Training examples before rebalancing; the FedAvg weight.
    pub n_samples: usize,
    /// Per-batch training losses over all local epochs.
    pub train_loss_trace: Vec<f64>,
    pub batches_per_epoch: usize,
    /// Mean training loss of each local epoch.
    pub epoch_train_loss: Vec<f64>,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

impl ClientUpdate {
    pub fn train_loss_end(&self) -> f64 {
        self.epoch_train_loss.last().copied().unwrap_or(f64::NAN)
    }
}
