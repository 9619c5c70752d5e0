use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Example, Label};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// Minority upsampling schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RebalancePolicy {
    pub enabled: bool,
    /// The augmented set is rebuilt every this many epochs.
    pub regenerate_every: usize,
    /// Standard deviation of the additive Gaussian jitter on each copy.
    pub jitter_scale: f64,
}

impl Default for RebalancePolicy {
    fn default() -> Self {
        Self {
            enabled: true,
            regenerate_every: 2,
            jitter_scale: 0.1,
        }
    }
}

impl RebalancePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.regenerate_every < 1 {
            return Err(Error::InvalidConfig("regenerate_every must be >= 1".into()));
        }
        if !(self.jitter_scale.is_finite() && self.jitter_scale >= 0.0) {
            return Err(Error::InvalidConfig("jitter_scale must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn regeneration_index(&self, epoch_index: usize) -> usize {
        epoch_index / self.regenerate_every.max(1)
    }
}

/// Upsamples the minority class to the majority count.
///
/// Originals pass through unchanged and in order; the added copies follow.
/// Copy `i` of regeneration window `r` is a uniformly drawn minority example
/// plus jitter drawn from a stream keyed by `(base_seed, r, i)`, so a window
/// always rebuilds the same set. Copies keep the id of their source example.
pub fn rebalance_minority(
    train: &Dataset,
    policy: &RebalancePolicy,
    epoch_index: usize,
    base_seed: u64,
) -> Result<Dataset> {
    policy.validate()?;
    if !policy.enabled {
        return Ok(train.clone());
    }
    let (n_pos, n_neg) = (train.n_pos(), train.n_neg());
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::RebalanceInfeasible(format!(
            "training set has {n_neg} negatives and {n_pos} positives"
        )));
    }
    if n_pos == n_neg {
        return Ok(train.clone());
    }
    let minority_label = if n_pos < n_neg { Label::Overlap } else { Label::NoOverlap };
    let minority: Vec<&Example> = train.iter().filter(|e| e.label == minority_label).collect();
    let deficit = n_pos.abs_diff(n_neg);

    let window = policy.regeneration_index(epoch_index) as u64;
    let mut pick_rng = seed::rng(base_seed, &[tag::REBALANCE_PICK, window]);
    let mut examples = train.examples().to_vec();
    examples.reserve(deficit);
    for item in 0..deficit {
        let source = minority[pick_rng.random_range(0..minority.len())];
        let mut jitter = seed::rng(base_seed, &[tag::REBALANCE_ITEM, window, item as u64]);
        let features = source
            .features
            .iter()
            .map(|v| {
                let z: f64 = jitter.sample(StandardNormal);
                v + policy.jitter_scale * z
            })
            .collect();
        examples.push(Example {
            id: source.id,
            client_id: source.client_id,
            features,
            label: minority_label,
        });
    }
    Ok(Dataset::from_parts_unchecked(train.dim(), examples))
}
