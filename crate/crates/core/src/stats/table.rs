use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{bonferroni, delong_test, format_p_value, wilcoxon_signed_rank, TestResult};
use crate::data::Label;
use crate::eval::{Evaluation, ModelSet};
use crate::paradigms::Paradigm;
use crate::{Error, Result};

/// Where a comparison is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Per-client validation AUCs, paired across clients (Wilcoxon).
    LocalValidation,
    /// Scores on the shared test set (DeLong).
    PooledTest,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::LocalValidation => "local validation",
            Setting::PooledTest => "pooled test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelRef {
    /// All models of a paradigm (for paired per-client comparisons).
    Paradigm(Paradigm),
    /// One named model on the test set: `CL`, `FL` or `LL_k`.
    Named(String),
}

impl ModelRef {
    pub fn local(client_id: u32) -> Self {
        ModelRef::Named(ModelSet::local_name(client_id))
    }
}

impl fmt::Display for ModelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelRef::Paradigm(p) => f.write_str(p.abbrev()),
            ModelRef::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Footnote {
    /// `*` — paired local-validation comparisons, Bonferroni over the family.
    Star,
    /// `†` — primary pooled-test comparison, uncorrected.
    Dagger,
    /// `‡` — paradigm vs each local model, Bonferroni over the local models.
    DoubleDagger,
}

impl Footnote {
    pub fn symbol(self) -> &'static str {
        match self {
            Footnote::Star => "*",
            Footnote::Dagger => "†",
            Footnote::DoubleDagger => "‡",
        }
    }
}

/// A correction family: comparisons sharing one Bonferroni denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub footnote: Footnote,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub first: ModelRef,
    pub second: ModelRef,
    pub setting: Setting,
    pub family: Family,
}

impl Comparison {
    pub fn label(&self) -> String {
        format!("{} vs {}", self.first, self.second)
    }
}

/// The standard plan: three paired Wilcoxon tests (family 3), DeLong CL vs FL
/// (uncorrected), and DeLong of CL and of FL against every local model
/// (family = number of local models).
pub fn standard_plan(client_ids: &[u32]) -> Vec<Comparison> {
    let para = |p| ModelRef::Paradigm(p);
    let named = |s: &str| ModelRef::Named(s.to_string());
    let star = Family { footnote: Footnote::Star, size: 3 };
    let mut plan = vec![
        (para(Paradigm::Centralized), para(Paradigm::Local)),
        (para(Paradigm::Federated), para(Paradigm::Local)),
        (para(Paradigm::Centralized), para(Paradigm::Federated)),
    ]
    .into_iter()
    .map(|(first, second)| Comparison {
        first,
        second,
        setting: Setting::LocalValidation,
        family: star,
    })
    .collect::<Vec<_>>();
    plan.push(Comparison {
        first: named("CL"),
        second: named("FL"),
        setting: Setting::PooledTest,
        family: Family { footnote: Footnote::Dagger, size: 1 },
    });
    let ddag = Family { footnote: Footnote::DoubleDagger, size: client_ids.len() };
    for head in ["CL", "FL"] {
        for &k in client_ids {
            plan.push(Comparison {
                first: named(head),
                second: ModelRef::local(k),
                setting: Setting::PooledTest,
                family: ddag,
            });
        }
    }
    plan
}

/// What the significance tests consume: per-client validation AUCs and
/// test-set scores. Built from an [`Evaluation`] or assembled directly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AucEvidence {
    pub local_aucs: BTreeMap<Paradigm, BTreeMap<u32, f64>>,
    pub test_scores: BTreeMap<String, Vec<f64>>,
    pub test_labels: Vec<Label>,
}

impl From<&Evaluation> for AucEvidence {
    fn from(ev: &Evaluation) -> Self {
        Self {
            local_aucs: Paradigm::ALL
                .iter()
                .map(|&p| (p, ev.local_aucs(p)))
                .filter(|(_, m)| !m.is_empty())
                .collect(),
            test_scores: ev.test_scores.clone(),
            test_labels: ev.test_labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub comparison: Comparison,
    pub result: TestResult,
}

impl SignificanceRow {
    pub const CSV_HEADER: &'static str = "comparison,setting,test,statistic,p_value,significant,footnote";

    pub fn csv_line(&self) -> String {
        let sig = if self.result.significant { "YES" } else { "NO" };
        format!(
            "{},{},{},{:.2},{},{},{}",
            self.comparison.label(),
            self.comparison.setting,
            self.result.test_name,
            self.result.statistic,
            format_p_value(self.result.p_value),
            sig,
            self.comparison.family.footnote.symbol(),
        )
    }

    pub fn to_csv(rows: &[SignificanceRow]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in rows {
            let _ = writeln!(out, "{}", r.csv_line());
        }
        out
    }
}

fn paired(evidence: &AucEvidence, c: &Comparison, a: Paradigm, b: Paradigm) -> Result<Vec<(f64, f64)>> {
    let missing = |p: Paradigm| Error::Plan(format!("{}: no local AUCs for {}", c.label(), p.abbrev()));
    let first = evidence.local_aucs.get(&a).ok_or_else(|| missing(a))?;
    let second = evidence.local_aucs.get(&b).ok_or_else(|| missing(b))?;
    first
        .iter()
        .map(|(k, &x)| {
            second.get(k).map(|&y| (x, y)).ok_or_else(|| {
                Error::Plan(format!("{}: {} has no AUC for client {k}", c.label(), b.abbrev()))
            })
        })
        .collect()
}

fn run_one(evidence: &AucEvidence, c: &Comparison, alpha: f64) -> Result<TestResult> {
    let context = |e: Error| match e {
        Error::Plan(_) => e,
        other => Error::Plan(format!("{}: {other}", c.label())),
    };
    match (c.setting, &c.first, &c.second) {
        (Setting::LocalValidation, ModelRef::Paradigm(a), ModelRef::Paradigm(b)) => {
            let pairs = paired(evidence, c, *a, *b)?;
            match wilcoxon_signed_rank(&pairs) {
                Ok(w) => Ok(w.to_test_result(alpha)),
                // identical per-client AUCs: no evidence of a difference
                Err(Error::NoInformation(_)) => {
                    let mut r = TestResult::new("Wilcoxon", 0.0, 1.0, alpha);
                    r.degenerate = true;
                    Ok(r)
                }
                Err(e) => Err(context(e)),
            }
        }
        (Setting::PooledTest, ModelRef::Named(a), ModelRef::Named(b)) => {
            let scores = |name: &String| {
                evidence
                    .test_scores
                    .get(name)
                    .ok_or_else(|| Error::Plan(format!("{}: no test scores for {name}", c.label())))
            };
            let d = delong_test(scores(a)?, scores(b)?, &evidence.test_labels).map_err(context)?;
            Ok(d.to_test_result(alpha))
        }
        _ => Err(Error::Plan(format!(
            "{}: model references do not fit the {} setting",
            c.label(),
            c.setting
        ))),
    }
}

/// Runs every comparison of `plan` and applies each row's family correction.
pub fn build_significance_table(
    evidence: &AucEvidence,
    plan: &[Comparison],
    alpha: f64,
) -> Result<Vec<SignificanceRow>> {
    plan.iter()
        .map(|c| {
            let raw = run_one(evidence, c, alpha)?;
            let result = bonferroni(&[raw], c.family.size).remove(0);
            Ok(SignificanceRow { comparison: c.clone(), result })
        })
        .collect()
}
