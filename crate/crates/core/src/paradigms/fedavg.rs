use std::cmp::Ordering;

use super::ClientUpdate;
use crate::model::ParamVector;
use crate::{Error, Result};

fn canonical_order(a: &(u32, usize, &ParamVector), b: &(u32, usize, &ParamVector)) -> Ordering {
    a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| {
        let bits = |p: &ParamVector| p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        bits(a.2).cmp(&bits(b.2))
    })
}

/// `sum_k (n_k / n) * w_k` over `(key, n_k, w_k)` triples.
///
/// Terms are summed in a canonical order (key, weight, then parameter bits),
/// so the result does not depend on the order updates arrive in.
pub fn weighted_average(entries: &[(u32, usize, &ParamVector)]) -> Result<ParamVector> {
    let first = entries
        .first()
        .ok_or_else(|| Error::InvalidInput("no updates to aggregate".into()))?;
    if let Some(bad) = entries.iter().find(|e| !e.2.same_layout(first.2)) {
        return Err(Error::Aggregation(format!(
            "update from client {} has a different parameter layout",
            bad.0
        )));
    }
    if let Some(bad) = entries.iter().find(|e| e.1 == 0) {
        return Err(Error::InvalidInput(format!(
            "client {} reports zero training samples",
            bad.0
        )));
    }
    let total: usize = entries.iter().map(|e| e.1).sum();
    let mut ordered = entries.to_vec();
    ordered.sort_by(canonical_order);

    let mut acc = vec![0.0; first.2.len()];
    for (_, n_k, params) in &ordered {
        let weight = *n_k as f64 / total as f64;
        for (a, v) in acc.iter_mut().zip(params.values()) {
            *a += weight * v;
        }
    }
    first.2.with_values(acc)
}

/// FedAvg: sample-weighted mean of the client parameter vectors.
pub fn fedavg_aggregate(updates: &[ClientUpdate]) -> Result<ParamVector> {
    let entries: Vec<_> = updates
        .iter()
        .map(|u| (u.client_id, u.n_samples, &u.params))
        .collect();
    weighted_average(&entries)
}
