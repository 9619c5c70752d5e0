//! Config-driven experiment commands: synth, run, evaluate, stats, monitor
//! and bench. Each writes plain-text artifacts under an output directory and
//! records them, with content hashes, in `manifest.json`.

mod artifacts;
mod commands;
mod config;
pub mod tables;

pub use artifacts::{sha256_hex, ArtifactWriter, RunManifest, MANIFEST_FILE};
pub use commands::{
    cmd_bench, cmd_evaluate, cmd_monitor, cmd_run, cmd_stats, cmd_synth, listed_files, selected, BenchReport,
    BenchSeed, CohortRow, Diagnostics, Experiment, RoundLogRecord, RunReport, SynthReport, EVALUATION_FILE,
    ROUND_LOG,
};
pub use config::{
    BenchConfig, ClientConfig, CohortConfig, EvalConfig, ExperimentConfig, FeatureShift, MonitorConfig, PRESETS,
};
