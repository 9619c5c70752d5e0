use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::ParamVector;
use crate::paradigms::ClientUpdate;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateSummary {
    pub round: usize,
    pub client_id: u32,
    /// `‖w_k − w_global‖₂`.
    pub update_norm: f64,
    pub train_loss_end: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Pairwise cosine similarity of client deltas for one round, rows and
/// columns in `client_ids` order. Similarity involving a zero delta is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub client_ids: Vec<u32>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Mean similarity of row `i` to every other client.
    pub fn mean_off_diagonal(&self, i: usize) -> f64 {
        let k = self.client_ids.len();
        if k < 2 {
            return 0.0;
        }
        let sum: f64 = (0..k).filter(|&j| j != i).map(|j| self.values[i][j]).sum();
        sum / (k - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub updates: Vec<UpdateSummary>,
    pub similarity: SimilarityMatrix,
    /// Clients whose delta was exactly zero.
    pub zero_updates: Vec<u32>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Update norms and cosine similarities of one round's client deltas.
pub fn summarize_round(round: usize, global_before: &ParamVector, updates: &[ClientUpdate]) -> Result<RoundSummary> {
    let mut deltas = Vec::with_capacity(updates.len());
    for u in updates {
        if !u.params.same_layout(global_before) {
            return Err(Error::InvalidInput(format!(
                "client {} update has a different parameter layout than the global model",
                u.client_id
            )));
        }
        let d: Vec<f64> = u
            .params
            .values()
            .iter()
            .zip(global_before.values())
            .map(|(a, b)| a - b)
            .collect();
        deltas.push(d);
    }
    let norms: Vec<f64> = deltas.iter().map(|d| dot(d, d).sqrt()).collect();
    let k = updates.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        if norms[i] > 0.0 {
            values[i][i] = 1.0;
        }
        for j in i + 1..k {
            let c = if norms[i] > 0.0 && norms[j] > 0.0 {
                (dot(&deltas[i], &deltas[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    let summaries = updates
        .iter()
        .zip(&norms)
        .map(|(u, &update_norm)| UpdateSummary {
            round,
            client_id: u.client_id,
            update_norm,
            train_loss_end: u.train_loss_end(),
            val_loss: u.val_loss,
            val_accuracy: u.val_accuracy,
        })
        .collect();
    Ok(RoundSummary {
        round,
        updates: summaries,
        similarity: SimilarityMatrix {
            client_ids: updates.iter().map(|u| u.client_id).collect(),
            values,
        },
        zero_updates: updates
            .iter()
            .zip(&norms)
            .filter(|(_, n)| **n == 0.0)
            .map(|(u, _)| u.client_id)
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierPolicy {
    pub z_threshold: f64,
    /// Smallest absolute gap below the median worth flagging. With few
    /// clients the MAD can be tiny, and without a floor negligible gaps
    /// would pass the z rule.
    pub min_deviation: f64,
}

impl Default for OutlierPolicy {
    fn default() -> Self {
        Self { z_threshold: 3.0, min_deviation: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// Round-averaged mean cosine similarity to the other clients.
    CosineSimilarity,
    /// Round-averaged validation accuracy.
    ValidationAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierFlag {
    pub client_id: u32,
    pub signal: Signal,
    pub value: f64,
    pub robust_z: f64,
    pub reason: String,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// `(x − median) / (1.4826 · MAD)`. When the MAD is zero the scale falls
/// back to `1.2533 · mean absolute deviation`; when that is zero too every
/// score is 0.
pub fn robust_z_scores(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let med = median(values);
    let abs_dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&abs_dev);
    let scale = if mad > 0.0 {
        1.4826 * mad
    } else {
        1.2533 * abs_dev.iter().sum::<f64>() / values.len() as f64
    };
    if scale == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|x| (x - med) / scale).collect()
}

/// Flags clients whose round-averaged similarity or validation accuracy sits
/// more than `z_threshold` robust standard deviations, and at least
/// `min_deviation` in absolute terms, below the client median.
pub fn flag_outlier_clients(history: &[RoundSummary], policy: &OutlierPolicy) -> Result<Vec<OutlierFlag>> {
    if history.len() < 2 {
        return Err(Error::NotEnoughData(format!(
            "outlier detection needs at least 2 rounds, got {}",
            history.len()
        )));
    }
    let ids = &history[0].similarity.client_ids;
    if ids.len() < 3 {
        return Err(Error::NotEnoughData(format!(
            "outlier detection needs at least 3 clients, got {}",
            ids.len()
        )));
    }
    let mut cosine: BTreeMap<u32, f64> = BTreeMap::new();
    let mut accuracy: BTreeMap<u32, f64> = BTreeMap::new();
    for r in history {
        if &r.similarity.client_ids != ids {
            return Err(Error::InvalidInput(format!(
                "round {} has a different client set than round {}",
                r.round, history[0].round
            )));
        }
        for (i, u) in r.updates.iter().enumerate() {
            *cosine.entry(u.client_id).or_default() += r.similarity.mean_off_diagonal(i);
            *accuracy.entry(u.client_id).or_default() += u.val_accuracy;
        }
    }
    let rounds = history.len() as f64;
    let mut flags = Vec::new();
    for (signal, totals) in [(Signal::CosineSimilarity, &cosine), (Signal::ValidationAccuracy, &accuracy)] {
        let values: Vec<f64> = totals.values().map(|t| t / rounds).collect();
        let med = median(&values);
        for ((&client_id, &value), z) in totals.keys().zip(&values).zip(robust_z_scores(&values)) {
            if z < -policy.z_threshold && med - value >= policy.min_deviation {
                let what = match signal {
                    Signal::CosineSimilarity => "mean cosine similarity",
                    Signal::ValidationAccuracy => "validation accuracy",
                };
                flags.push(OutlierFlag {
                    client_id,
                    signal,
                    value,
                    robust_z: z,
                    reason: format!("{what} {value:.4} is {:.2} robust SDs below the client median", -z),
                });
            }
        }
    }
    flags.sort_by_key(|f| (f.client_id, f.signal));
    Ok(flags)
}
