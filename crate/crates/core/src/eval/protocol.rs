use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    confusion_at, metrics_from, optimize_threshold, roc_and_auc, MetricReport, RocCurve,
    ThresholdChoice, ThresholdSource,
};
use crate::data::{Dataset, Label, SplitLayout};
use crate::model::{predict_proba, Batch, ParamVector, PredictorSpec};
use crate::paradigms::Paradigm;
use crate::{Error, Result};

/// Final models of each paradigm. Missing paradigms are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSet {
    pub local: BTreeMap<u32, ParamVector>,
    pub centralized: Option<ParamVector>,
    pub federated: Option<ParamVector>,
}

impl ModelSet {
    pub fn local_name(client_id: u32) -> String {
        format!("LL_{client_id}")
    }

    /// `(name, paradigm, owning client, params)` in table order: CL, FL, LL_k.
    pub fn entries(&self) -> Vec<(String, Paradigm, Option<u32>, &ParamVector)> {
        let mut out = Vec::new();
        if let Some(p) = &self.centralized {
            out.push(("CL".to_string(), Paradigm::Centralized, None, p));
        }
        if let Some(p) = &self.federated {
            out.push(("FL".to_string(), Paradigm::Federated, None, p));
        }
        for (&k, p) in &self.local {
            out.push((Self::local_name(k), Paradigm::Local, Some(k), p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub paradigm: Paradigm,
    /// Client whose data was scored (local tables) or that owns the model
    /// (LL rows of the pooled-test table).
    pub client_id: Option<u32>,
    pub threshold: ThresholdChoice,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Per-client validation tables, one per paradigm.
    pub local: BTreeMap<Paradigm, Vec<EvalRow>>,
    /// Every model on the pooled test set.
    pub pooled_test: Vec<EvalRow>,
    pub test_roc: BTreeMap<String, RocCurve>,
    pub test_scores: BTreeMap<String, Vec<f64>>,
    pub test_labels: Vec<Label>,
}

impl Evaluation {
    /// Validation AUC per client for one paradigm.
    pub fn local_aucs(&self, paradigm: Paradigm) -> BTreeMap<u32, f64> {
        self.local
            .get(&paradigm)
            .into_iter()
            .flatten()
            .filter_map(|r| Some((r.client_id?, r.report.auc?)))
            .collect()
    }

    pub fn test_auc(&self, model: &str) -> Option<f64> {
        self.pooled_test
            .iter()
            .find(|r| r.model == model)
            .and_then(|r| r.report.auc)
    }
}

/// Predicted probabilities for every example of `data`.
pub fn score_dataset(params: &ParamVector, spec: &PredictorSpec, data: &Dataset) -> Result<Vec<f64>> {
    predict_proba(params, spec, &Batch::from_examples(data.dim(), data.iter()))
}

/// Full metric report at a fixed threshold; AUC is filled in when both
/// classes are present.
pub fn evaluate_at(scores: &[f64], labels: &[Label], threshold: f64) -> Result<MetricReport> {
    let mut report = metrics_from(confusion_at(scores, labels, threshold)?);
    report.threshold = Some(threshold);
    report.auc = match roc_and_auc(scores, labels) {
        Ok((_, a)) => Some(a),
        Err(Error::AucUndefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(report)
}

fn calibrate(
    params: &ParamVector,
    spec: &PredictorSpec,
    data: &Dataset,
    source: ThresholdSource,
) -> Result<ThresholdChoice> {
    let scores = score_dataset(params, spec, data)?;
    optimize_threshold(&scores, &data.labels(), source)
}

/// Two-level evaluation.
///
/// Local level: each model scores each client's validation split with a
/// threshold optimized on that client's training split (LL_k only on its own
/// client). Pooled level: every model scores the test set; CL and FL use one
/// threshold optimized on pooled training+validation data, LL_k uses one
/// optimized on client k's training+validation data.
pub fn two_level_evaluate(models: &ModelSet, spec: &PredictorSpec, layout: &SplitLayout) -> Result<Evaluation> {
    for k in models.local.keys() {
        if !layout.clients.contains_key(k) {
            return Err(Error::InvalidInput(format!("no split for local model of client {k}")));
        }
    }
    let mut local: BTreeMap<Paradigm, Vec<EvalRow>> = BTreeMap::new();
    for (name, paradigm, owner, params) in models.entries() {
        let rows = local.entry(paradigm).or_default();
        for (&client_id, split) in &layout.clients {
            if owner.is_some_and(|o| o != client_id) {
                continue;
            }
            let threshold = calibrate(params, spec, &split.train, ThresholdSource::ClientLocal)
                .map_err(|e| Error::client(client_id, e))?;
            let scores = score_dataset(params, spec, &split.validation)?;
            let report = evaluate_at(&scores, &split.validation.labels(), threshold.threshold)?;
            rows.push(EvalRow {
                model: name.clone(),
                paradigm,
                client_id: Some(client_id),
                threshold,
                report,
            });
        }
    }

    let test_labels = layout.test.labels();
    let pooled = Dataset::concat(layout.dim(), [&layout.pooled_train(), &layout.pooled_validation()])?;
    let mut pooled_test = Vec::new();
    let mut test_roc = BTreeMap::new();
    let mut test_scores = BTreeMap::new();
    for (name, paradigm, owner, params) in models.entries() {
        let threshold = match owner {
            None => calibrate(params, spec, &pooled, ThresholdSource::PooledTrainValidation)?,
            Some(k) => {
                let split = &layout.clients[&k];
                let own = Dataset::concat(layout.dim(), [&split.train, &split.validation])?;
                calibrate(params, spec, &own, ThresholdSource::ClientLocal)
                    .map_err(|e| Error::client(k, e))?
            }
        };
        let scores = score_dataset(params, spec, &layout.test)?;
        let report = evaluate_at(&scores, &test_labels, threshold.threshold)?;
        let (roc, _) = roc_and_auc(&scores, &test_labels)?;
        test_roc.insert(name.clone(), roc);
        test_scores.insert(name.clone(), scores);
        pooled_test.push(EvalRow {
            model: name,
            paradigm,
            client_id: owner,
            threshold,
            report,
        });
    }
    Ok(Evaluation {
        local,
        pooled_test,
        test_roc,
        test_scores,
        test_labels,
    })
}
