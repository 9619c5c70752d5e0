use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fedcompare::harness::{
    cmd_bench, cmd_evaluate, cmd_monitor, cmd_run, cmd_stats, cmd_synth, Experiment, ExperimentConfig,
};
use fedcompare::paradigms::Paradigm;
use fedcompare::stats::format_p_value;

/// Local vs centralized vs federated training on synthetic non-IID cohorts.
#[derive(Parser)]
#[command(name = "fedcompare", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Config file, or a shipped preset name (table1, iid, label_flip).
    #[arg(long, default_value = "table1")]
    config: String,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParadigmArg {
    Ll,
    Cl,
    Fl,
    All,
}

impl ParadigmArg {
    fn selection(self) -> Option<Paradigm> {
        match self {
            ParadigmArg::Ll => Some(Paradigm::Local),
            ParadigmArg::Cl => Some(Paradigm::Centralized),
            ParadigmArg::Fl => Some(Paradigm::Federated),
            ParadigmArg::All => None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the client cohort and split.
    Synth(Common),
    /// Train one or all paradigms.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        paradigm: ParadigmArg,
    },
    /// Per-client and pooled-test metric tables.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        paradigm: ParadigmArg,
    },
    /// Significance tests on the evaluation results.
    Stats(Common),
    /// Update diagnostics and aggregated thresholds for the federated run.
    Monitor(Common),
    /// synth, run and evaluate over several seeds and check the paradigm ordering.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Number of seeds; overrides the config.
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn experiment(common: &Common) -> fedcompare::Result<Experiment> {
    let config = ExperimentConfig::resolve(&common.config)?;
    Ok(Experiment::new(config, common.seed, common.out.clone()))
}

fn run(cli: Cli) -> fedcompare::Result<bool> {
    match cli.command {
        Command::Synth(common) => {
            let exp = experiment(&common)?;
            println!("{}", cmd_synth(&exp)?);
        }
        Command::Run { common, paradigm } => {
            let exp = experiment(&common)?;
            let report = cmd_run(&exp, paradigm.selection())?;
            for c in report.checkpoints {
                println!("wrote {}", exp.out.join(c).display());
            }
        }
        Command::Evaluate { common, paradigm } => {
            let exp = experiment(&common)?;
            let ev = cmd_evaluate(&exp, paradigm.selection())?;
            println!("{:<8} {:>8} {:>9} {:>8} {:>8}", "model", "AUC", "threshold", "sens", "spec");
            for r in &ev.pooled_test {
                println!(
                    "{:<8} {:>8.4} {:>9.4} {:>8.4} {:>8.4}",
                    r.model,
                    r.report.auc.unwrap_or(f64::NAN),
                    r.threshold.threshold,
                    r.report.sensitivity,
                    r.report.specificity
                );
            }
        }
        Command::Stats(common) => {
            let exp = experiment(&common)?;
            for r in cmd_stats(&exp)? {
                println!(
                    "{:<12} {:<16} {:<8} {:>8.2} {:>10} {}{}",
                    r.comparison.label(),
                    r.comparison.setting.to_string(),
                    r.result.test_name,
                    r.result.statistic,
                    format_p_value(r.result.p_value),
                    if r.result.significant { "YES" } else { "NO" },
                    r.comparison.family.footnote.symbol()
                );
            }
        }
        Command::Monitor(common) => {
            let exp = experiment(&common)?;
            let d = cmd_monitor(&exp)?;
            if d.flags.is_empty() {
                println!("no clients flagged at z = {}", d.z_threshold);
            }
            for f in &d.flags {
                println!("client {}: {}", f.client_id, f.reason);
            }
            for t in &d.global_thresholds {
                println!("{:?}: threshold {} (J = {:.4})", t.rule, t.threshold, t.aggregate_j);
            }
        }
        Command::Bench { common, seeds } => {
            let exp = experiment(&common)?;
            let report = cmd_bench(&exp, seeds)?;
            println!("{report}");
            return Ok(report.pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
