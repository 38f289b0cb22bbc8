//! The `spt` command line: one subcommand per pipeline stage, all reading a
//! JSON [`ExperimentConfig`] plus `--set key=value` overrides.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    analyze_results, cmd_analyze, cmd_distances, cmd_eval, cmd_gen_corpus, cmd_pretrain,
    cmd_sweep_length, cmd_train, distance_table_csv, CommandRecord, CORRELATIONS_FILE,
    DISTANCES_FILE, IMPACT_FILE, MANIFEST_FILE, MODEL_FILE, PROMPT_FILE, RESULTS_FILE, RUNS_FILE,
    SWEEP_FILE, TOKENIZER_FILE, TUNED_MODEL_FILE,
};
pub use config::{ExperimentConfig, SEED_ENV};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "spt", version, about = "Soft prompt tuning for cross-lingual transfer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON). Defaults apply to every absent key.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.k=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Output directory (same as `--set out_dir=...`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic corpus and language profiles.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        /// Generator spec (same as `--set synthetic_spec=...`).
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Build the tokenizer and pretrain the language model.
    Pretrain {
        #[command(flatten)]
        common: Common,
    },
    /// Tune one soft prompt on the source language.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Train and evaluate once per seed on every target language.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Maximum number of languages evaluated concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Repeat the evaluation at prompt lengths 1, 2, 5, 10, 20 and 30.
    SweepLength {
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild results, correlation and impact reports from the runs table.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the six distances from the source language to every profile.
    Distances {
        #[command(flatten)]
        common: Common,
        /// Profiles file (same as `--set profiles=...`).
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Source language (same as `--set train.source_language=...`).
        #[arg(long)]
        source: Option<String>,
    },
}

fn resolve(common: &Common, extra: Vec<String>) -> Result<ExperimentConfig> {
    let mut sets = common.sets.clone();
    if let Some(out) = &common.out {
        sets.push(format!("out_dir={}", json_string(&out.display().to_string())));
    }
    sets.extend(extra);
    ExperimentConfig::load(common.config.as_deref(), &sets)
}

fn json_string(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn path_set(key: &str, p: &Option<PathBuf>) -> Option<String> {
    p.as_ref()
        .map(|p| format!("{key}={}", json_string(&p.display().to_string())))
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus { common, spec } => {
            let c = resolve(&common, path_set("synthetic_spec", &spec).into_iter().collect())?;
            cmd_gen_corpus(&c).map(drop)
        }
        Command::Pretrain { common } => cmd_pretrain(&resolve(&common, vec![])?).map(drop),
        Command::Train { common } => {
            let m = cmd_train(&resolve(&common, vec![])?)?;
            println!(
                "best epoch {} (validation accuracy {:.4}), {} trainable parameters",
                m.best_epoch, m.best_validation_accuracy, m.trainable_parameters
            );
            Ok(())
        }
        Command::Eval { common, jobs } => cmd_eval(&resolve(&common, vec![])?, jobs).map(drop),
        Command::SweepLength { common } => {
            for row in cmd_sweep_length(&resolve(&common, vec![])?)? {
                println!("length {:>2}: mean accuracy {:.4}", row.length, row.mean);
            }
            Ok(())
        }
        Command::Analyze { common } => cmd_analyze(&resolve(&common, vec![])?).map(drop),
        Command::Distances {
            common,
            profiles,
            source,
        } => {
            let mut extra: Vec<String> = path_set("profiles", &profiles).into_iter().collect();
            if let Some(s) = source {
                extra.push(format!("train.source_language={}", json_string(&s)));
            }
            print!("{}", cmd_distances(&resolve(&common, extra)?)?);
            Ok(())
        }
    }
}

/// Entry point for the binary: parses arguments, runs, and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
