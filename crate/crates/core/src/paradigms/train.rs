use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Paradigm, TrainingRunRecord};
use crate::data::{rebalance_minority, Dataset, RebalancePolicy, SplitLayout};
use crate::model::{
    adamw_step, backward, bce_with_logits, forward_logits, init_params, AdamWConfig, Batch,
    OptimizerState, ParamVector, PredictorSpec,
};
use crate::seed::{self, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(flatten)]
    pub optimizer: AdamWConfig,
    pub rebalance: RebalancePolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            optimizer: AdamWConfig::default(),
            rebalance: RebalancePolicy::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        self.optimizer.validate()?;
        self.rebalance.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 0-based absolute epoch index.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Result of a stretch of local training.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRun {
    pub params: ParamVector,
    pub epochs: Vec<EpochStats>,
    pub batch_losses: Vec<f64>,
    pub batches_per_epoch: usize,
    pub steps: usize,
}

/// Mean BCE loss and accuracy at probability threshold 0.5 (logit >= 0).
pub fn evaluate_loss_accuracy(
    params: &ParamVector,
    spec: &PredictorSpec,
    data: &Dataset,
) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty dataset".into()));
    }
    let batch = Batch::from_examples(data.dim(), data.iter());
    let logits = forward_logits(params, spec, &batch)?;
    let (loss, _) = bce_with_logits(&logits, batch.labels())?;
    let correct = logits
        .iter()
        .zip(batch.labels())
        .filter(|(&z, &y)| (z >= 0.0) == (y == 1.0))
        .count();
    Ok((loss, correct as f64 / data.len() as f64))
}

/// Mini-batch AdamW over the absolute epoch indices in `epochs`, starting from
/// `init` with fresh optimizer moments. The rebalanced set for each epoch
/// comes from `policy`; shuffling and augmentation draw from `stream`.
#[allow(clippy::too_many_arguments)]
pub fn train_epochs(
    init: ParamVector,
    train: &Dataset,
    validation: &Dataset,
    spec: &PredictorSpec,
    config: &TrainConfig,
    policy: &RebalancePolicy,
    epochs: Range<usize>,
    stream: u64,
) -> Result<LocalRun> {
    config.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InvalidInput("train and validation sets must be non-empty".into()));
    }
    let mut params = init;
    let mut state = OptimizerState::new(config.optimizer, params.len());
    let mut stats = Vec::new();
    let mut batch_losses = Vec::new();
    let mut batches_per_epoch = 0;
    let mut steps = 0;
    for epoch in epochs {
        let balanced = rebalance_minority(train, policy, epoch, stream)?;
        let mut order: Vec<usize> = (0..balanced.len()).collect();
        order.shuffle(&mut seed::rng(stream, &[tag::SHUFFLE, epoch as u64]));

        let mut loss_sum = 0.0;
        batches_per_epoch = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch = Batch::from_examples(
                balanced.dim(),
                chunk.iter().map(|&i| &balanced.examples()[i]),
            );
            let (loss, grad) = backward(&params, spec, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1, loss });
            }
            adamw_step(&mut state, &mut params, &grad).map_err(|e| match e {
                Error::Numerical(_) => Error::Divergence {
                    epoch: epoch + 1,
                    loss,
                },
                other => other,
            })?;
            loss_sum += loss * chunk.len() as f64;
            batch_losses.push(loss);
            batches_per_epoch += 1;
            steps += 1;
        }
        let train_loss = loss_sum / balanced.len() as f64;
        let (val_loss, val_accuracy) = evaluate_loss_accuracy(&params, spec, validation)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                loss: train_loss,
            });
        }
        stats.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
    }
    Ok(LocalRun {
        params,
        epochs: stats,
        batch_losses,
        batches_per_epoch,
        steps,
    })
}

/// Local Learning: `config.epochs` epochs on one client's data. The model is
/// initialized from `seed`, which also keys shuffling and augmentation.
pub fn train_local(
    train: &Dataset,
    validation: &Dataset,
    spec: &PredictorSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ParamVector, TrainingRunRecord)> {
    let init = init_params(spec, seed)?;
    let run = train_epochs(
        init,
        train,
        validation,
        spec,
        config,
        &config.rebalance,
        0..config.epochs,
        seed,
    )?;
    let client_id = train.examples().first().map(|e| e.client_id);
    let mut record = TrainingRunRecord::new(Paradigm::Local);
    record.extend_from(client_id, &run.epochs);
    Ok((run.params, record))
}

/// Centralized Learning: pools every client's train split (rebalanced as a
/// whole) and validates on the union of the validation splits.
pub fn train_centralized(
    layout: &SplitLayout,
    spec: &PredictorSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ParamVector, TrainingRunRecord)> {
    if layout.clients.is_empty() {
        return Err(Error::InvalidInput("layout has no clients".into()));
    }
    let train = layout.pooled_train();
    let validation = layout.pooled_validation();
    let init = init_params(spec, seed)?;
    let run = train_epochs(
        init,
        &train,
        &validation,
        spec,
        config,
        &config.rebalance,
        0..config.epochs,
        seed,
    )?;
    let mut record = TrainingRunRecord::new(Paradigm::Centralized);
    record.extend_from(None, &run.epochs);
    Ok((run.params, record))
}
