//! Comma-separated renderings of evaluation results and training curves.

use std::fmt::Write as _;

use crate::eval::{EvalRow, RocCurve};
use crate::paradigms::TrainingRunRecord;

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const METRICS_HEADER: &str = "model,paradigm,client_id,threshold,threshold_source,auc,accuracy,sensitivity,\
specificity,precision,f1,balanced_accuracy,youden_j,n_pos,n_neg,tp,fp,tn,fn";

pub fn metrics_csv(rows: &[EvalRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let m = &r.report;
        let source = serde_json::to_value(r.threshold.source)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.model,
            r.paradigm.abbrev(),
            opt(r.client_id),
            r.threshold.threshold,
            source,
            opt(m.auc),
            m.accuracy,
            m.sensitivity,
            m.specificity,
            m.precision,
            m.f1,
            m.balanced_accuracy,
            m.youden_j,
            m.n_pos,
            m.n_neg,
            m.counts.tp,
            m.counts.fp,
            m.counts.tn,
            m.counts.fn_,
        );
    }
    out
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    out
}

/// One row per epoch (or round); `client_id` is empty for pooled rows.
pub fn curve_csv(record: &TrainingRunRecord) -> String {
    let mut out = String::from("step,client_id,train_loss,val_loss,val_accuracy\n");
    for p in &record.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.step,
            opt(p.client_id),
            p.train_loss,
            p.val_loss,
            p.val_accuracy
        );
    }
    out
}
