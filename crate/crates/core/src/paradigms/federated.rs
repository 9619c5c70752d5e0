use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evaluate_loss_accuracy, train_epochs, weighted_average, ClientUpdate, CurvePoint, Paradigm,
    TrainConfig, TrainingRunRecord,
};
use crate::data::{ClientSplit, RebalancePolicy, SplitLayout};
use crate::model::{init_params, ParamVector, PredictorSpec};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClientFailurePolicy {
    /// Any client error aborts the round.
    #[default]
    Abort,
    /// Failed clients are skipped and the rest are reweighted.
    DropAndRenormalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    #[serde(default)]
    pub on_client_failure: ClientFailurePolicy,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            rounds: 5,
            local_epochs: 2,
            on_client_failure: ClientFailurePolicy::Abort,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 || self.local_epochs < 1 {
            return Err(Error::InvalidConfig("rounds and local_epochs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.rounds * self.local_epochs
    }
}

/// The global model a round started from and what every client sent back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundUpdates {
    /// 1-based round number.
    pub round: usize,
    pub global_before: ParamVector,
    pub updates: Vec<ClientUpdate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederatedRun {
    pub global: ParamVector,
    pub record: TrainingRunRecord,
    pub rounds: Vec<RoundUpdates>,
}

/// Client side of one round: start from the broadcast weights and train
/// `local_epochs` epochs on a training set regenerated for this round. The
/// client only ever sees its own split.
#[allow(clippy::too_many_arguments)]
fn client_round(
    client_id: u32,
    split: &ClientSplit,
    global: &ParamVector,
    spec: &PredictorSpec,
    config: &TrainConfig,
    rounds: &RoundConfig,
    round_index: usize,
    seed: u64,
) -> Result<ClientUpdate> {
    let stream = seed::derive(seed, &[u64::from(client_id), round_index as u64]);
    let policy = RebalancePolicy {
        regenerate_every: rounds.local_epochs,
        ..config.rebalance
    };
    let first = round_index * rounds.local_epochs;
    let run = train_epochs(
        global.clone(),
        &split.train,
        &split.validation,
        spec,
        config,
        &policy,
        first..first + rounds.local_epochs,
        stream,
    )?;
    let last = run.epochs.last().expect("at least one local epoch");
    Ok(ClientUpdate {
        client_id,
        n_samples: split.train.len(),
        train_loss_trace: run.batch_losses,
        batches_per_epoch: run.batches_per_epoch,
        epoch_train_loss: run.epochs.iter().map(|e| e.train_loss).collect(),
        val_loss: last.val_loss,
        val_accuracy: last.val_accuracy,
        params: run.params,
    })
}

/// Rounds of broadcast, local training and FedAvg aggregation.
///
/// Clients train in parallel; each draws from RNG streams keyed by
/// `(seed, client_id, round)`, so results match sequential execution. After
/// every round the record gets one row per client (the client's local model
/// on its validation split) and one pooled row with the new global model on
/// the union of validation splits.
pub fn run_federated(
    layout: &SplitLayout,
    spec: &PredictorSpec,
    config: &TrainConfig,
    rounds: &RoundConfig,
    seed: u64,
) -> Result<FederatedRun> {
    config.validate()?;
    rounds.validate()?;
    match layout.clients.len() {
        0 => return Err(Error::InvalidInput("layout has no clients".into())),
        1 => log::warn!("federated run with a single client degenerates to local learning"),
        _ => {}
    }
    let pooled_validation = layout.pooled_validation();
    let mut global = init_params(spec, seed)?;
    let mut record = TrainingRunRecord::new(Paradigm::Federated);
    let mut history = Vec::with_capacity(rounds.rounds);

    for round_index in 0..rounds.rounds {
        let results: Vec<(u32, Result<ClientUpdate>)> = layout
            .clients
            .par_iter()
            .map(|(&client_id, split)| {
                let r = client_round(client_id, split, &global, spec, config, rounds, round_index, seed);
                (client_id, r)
            })
            .collect();

        let mut updates = Vec::with_capacity(results.len());
        for (client_id, result) in results {
            match (result, rounds.on_client_failure) {
                (Ok(u), _) => updates.push(u),
                (Err(e), ClientFailurePolicy::Abort) => return Err(Error::client(client_id, e)),
                (Err(e), ClientFailurePolicy::DropAndRenormalize) => {
                    log::warn!("round {}: dropping client {client_id}: {e}", round_index + 1);
                }
            }
        }
        if updates.is_empty() {
            return Err(Error::Aggregation(format!(
                "round {}: every client failed",
                round_index + 1
            )));
        }

        let entries: Vec<_> = updates
            .iter()
            .map(|u| (u.client_id, u.n_samples, &u.params))
            .collect();
        let next = weighted_average(&entries)?;

        let step = round_index + 1;
        for u in &updates {
            record.points.push(CurvePoint {
                step,
                client_id: Some(u.client_id),
                train_loss: u.train_loss_end(),
                val_loss: u.val_loss,
                val_accuracy: u.val_accuracy,
            });
        }
        let n_total: usize = updates.iter().map(|u| u.n_samples).sum();
        let train_loss = updates
            .iter()
            .map(|u| u.train_loss_end() * u.n_samples as f64)
            .sum::<f64>()
            / n_total as f64;
        let (val_loss, val_accuracy) = evaluate_loss_accuracy(&next, spec, &pooled_validation)?;
        record.points.push(CurvePoint {
            step,
            client_id: None,
            train_loss,
            val_loss,
            val_accuracy,
        });

        history.push(RoundUpdates {
            round: step,
            global_before: std::mem::replace(&mut global, next),
            updates,
        });
    }
    Ok(FederatedRun {
        global,
        record,
        rounds: history,
    })
}
