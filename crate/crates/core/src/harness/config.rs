use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{ClientSpec, CohortGeometry, SplitOptions};
use crate::model::PredictorSpec;
use crate::paradigms::{RoundConfig, TrainConfig};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// How a client's feature offset is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureShift {
    #[default]
    None,
    /// Each coordinate drawn from `N(0, scale²)` on a stream keyed by the
    /// master seed and the client id.
    Random { scale: f64 },
    Explicit { vector: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub client_id: u32,
    pub n_total: usize,
    pub overlap_fraction: f64,
    #[serde(default)]
    pub label_noise_rate: f64,
    #[serde(default)]
    pub shift: FeatureShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub dim: usize,
    pub margin: f64,
    pub clients: Vec<ClientConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Points in the shared threshold grid used for J-curves.
    pub grid_size: usize,
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { grid_size: 101, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub z_threshold: f64,
    pub min_deviation: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { z_threshold: 3.0, min_deviation: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Number of master seeds; seed `i` is `master_seed + i`.
    pub seeds: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { seeds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub cohort: CohortConfig,
    pub model: PredictorSpec,
    pub train: TrainConfig,
    pub rounds: RoundConfig,
    pub splits: SplitOptions,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

/// Presets shipped with the crate.
pub const PRESETS: [(&str, &str); 3] = [
    ("table1", include_str!("../../presets/table1.toml")),
    ("iid", include_str!("../../presets/iid.toml")),
    ("label_flip", include_str!("../../presets/label_flip.toml")),
];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {name:?}")))?;
        Self::from_toml(text)
    }

    /// Loads `source` as a file path, falling back to a preset name.
    pub fn resolve(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if path.exists() {
            Self::load(path)
        } else if PRESETS.iter().any(|(n, _)| *n == source) {
            Self::preset(source)
        } else {
            Err(Error::MissingArtifact(path.to_path_buf()))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cohort;
        if c.clients.is_empty() {
            return Err(Error::InvalidConfig("cohort.clients: at least one client is required".into()));
        }
        if c.dim < 2 {
            return Err(Error::InvalidConfig(format!("cohort.dim: must be >= 2, got {}", c.dim)));
        }
        for client in &c.clients {
            match &client.shift {
                FeatureShift::Random { scale } if !(scale.is_finite() && *scale >= 0.0) => {
                    return Err(Error::InvalidConfig(format!(
                        "cohort.clients[{}].shift.scale: must be finite and >= 0",
                        client.client_id
                    )))
                }
                FeatureShift::Explicit { vector } if vector.len() != c.dim => {
                    return Err(Error::InvalidConfig(format!(
                        "cohort.clients[{}].shift.vector: {} entries, expected {}",
                        client.client_id,
                        vector.len(),
                        c.dim
                    )))
                }
                _ => {}
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for client in &c.clients {
            if !seen.insert(client.client_id) {
                return Err(Error::InvalidConfig(format!(
                    "cohort.clients: client id {} appears twice",
                    client.client_id
                )));
            }
        }
        for spec in self.client_specs(self.master_seed) {
            spec.validate(c.dim)?;
        }
        if self.model.input_dim != c.dim {
            return Err(Error::InvalidConfig(format!(
                "model.input_dim: {} does not match cohort.dim {}",
                self.model.input_dim, c.dim
            )));
        }
        self.model.validate()?;
        self.train.validate()?;
        self.rounds.validate()?;
        self.splits.validate()?;
        if self.eval.grid_size < 1 {
            return Err(Error::InvalidConfig("eval.grid_size: must be >= 1".into()));
        }
        if !(self.eval.alpha > 0.0 && self.eval.alpha < 1.0) {
            return Err(Error::InvalidConfig("eval.alpha: must lie in (0, 1)".into()));
        }
        if self.rounds.total_epochs() != self.train.epochs {
            log::warn!(
                "federated budget {}x{} epochs differs from train.epochs = {}",
                self.rounds.rounds,
                self.rounds.local_epochs,
                self.train.epochs
            );
        }
        Ok(())
    }

    /// Concrete per-client generation specs for `master_seed`.
    pub fn client_specs(&self, master_seed: u64) -> Vec<ClientSpec> {
        let dim = self.cohort.dim;
        self.cohort
            .clients
            .iter()
            .map(|c| {
                let feature_shift = match &c.shift {
                    FeatureShift::None => vec![0.0; dim],
                    FeatureShift::Explicit { vector } => vector.clone(),
                    FeatureShift::Random { scale } => {
                        let mut rng = seed::rng(master_seed, &[tag::SHIFT, u64::from(c.client_id)]);
                        (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
                    }
                };
                ClientSpec {
                    client_id: c.client_id,
                    n_total: c.n_total,
                    overlap_fraction: c.overlap_fraction,
                    feature_shift,
                    label_noise_rate: c.label_noise_rate,
                }
            })
            .collect()
    }

    pub fn geometry(&self) -> CohortGeometry {
        CohortGeometry { dim: self.cohort.dim, margin: self.cohort.margin }
    }
}
