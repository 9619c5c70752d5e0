//! Experiment harness comparing Local, Centralized and Federated (FedAvg)
//! training on synthetic non-IID client cohorts.
//!
//! The crate is organized by subsystem:
//!
//! * [`data`] - cohort generation, the test/validation split protocol,
//!   minority rebalancing and prediction-file ingestion.
//! * [`model`] - logistic / MLP classifiers, BCE-with-logits, backprop and AdamW.
//! * [`paradigms`] - the shared training loop, FedAvg aggregation and round orchestration.
//! * [`eval`] - confusion metrics, ROC/AUC, Youden-J thresholds and the two-level protocol.
//! * [`stats`] - DeLong, Wilcoxon signed-rank, weighted kappa, Bonferroni and the significance table.
//! * [`monitor`] - server-side update diagnostics and J-curve threshold aggregation.
//! * [`harness`] - config files, presets, manifests and the command implementations.

pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod model;
pub mod monitor;
pub mod paradigms;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
