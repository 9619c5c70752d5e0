//! Labeled feature-vector datasets, synthetic cohort generation, the split
//! protocol and minority-class rebalancing.

mod cohort;
mod io;
mod rebalance;
mod split;

pub use cohort::{generate_cohort, ClientSpec, CohortGeometry};
pub use io::{
    load_predictions, load_rater_labels, parse_dataset_csv, parse_predictions, parse_rater_labels,
    write_dataset_csv, write_predictions, Predictions, ScoreKind,
};
pub use rebalance::{rebalance_minority, RebalancePolicy};
pub use split::{
    per_client_validation_split, redistribute, split_protocol, stratified_test_split, ClientSplit,
    SplitLayout, SplitOptions,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary target. `NoOverlap` is class 0, `Overlap` is class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NoOverlap,
    Overlap,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::NoOverlap),
            1 => Some(Label::Overlap),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::NoOverlap => 0,
            Label::Overlap => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.bit())
    }

    pub fn is_positive(self) -> bool {
        self == Label::Overlap
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::NoOverlap => Label::Overlap,
            Label::Overlap => Label::NoOverlap,
        }
    }
}

/// One labeled example. `id` is stable across every split and copy;
/// `client_id` records the client the example originated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: u64,
    pub client_id: u32,
    pub features: Vec<f64>,
    pub label: Label,
}

/// An immutable collection of examples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(dim: usize, examples: Vec<Example>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("feature dimension must be positive".into()));
        }
        for ex in &examples {
            if ex.features.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    actual: ex.features.len(),
                });
            }
            if ex.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "example {} has a non-finite feature",
                    ex.id
                )));
            }
        }
        Ok(Self { dim, examples })
    }

    pub(crate) fn from_parts_unchecked(dim: usize, examples: Vec<Example>) -> Self {
        Self { dim, examples }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            examples: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    pub fn n_pos(&self) -> usize {
        self.count_label(Label::Overlap)
    }

    pub fn n_neg(&self) -> usize {
        self.count_label(Label::NoOverlap)
    }

    pub fn has_both_classes(&self) -> bool {
        self.n_pos() > 0 && self.n_neg() > 0
    }

    pub fn labels(&self) -> Vec<Label> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.examples.iter().map(|e| e.id).collect()
    }

    /// Concatenates datasets in the given order.
    pub fn concat<'a, I>(dim: usize, parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Dataset>,
    {
        let mut examples = Vec::new();
        for part in parts {
            if part.dim != dim {
                return Err(Error::Shape {
                    expected: dim,
                    actual: part.dim,
                });
            }
            examples.extend(part.examples.iter().cloned());
        }
        Ok(Self { dim, examples })
    }

    /// Keeps the examples for which `keep` returns true, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&Example) -> bool) -> Self {
        Self {
            dim: self.dim,
            examples: self.examples.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// Per-client datasets keyed by client id.
pub type Cohort = BTreeMap<u32, Dataset>;

/// Round-half-away-from-zero of `fraction * count`, as used by every
/// per-class split size.
pub fn class_quota(fraction: f64, count: usize) -> usize {
    (fraction * count as f64).round() as usize
}
