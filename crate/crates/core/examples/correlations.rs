//! Correlates zero-shot transfer accuracy with each linguistic distance and
//! with pretraining data size, printing `correlations.csv`.
//!
//! cargo run --release --example correlations

mod common;

use spt_core::analysis::{correlation_table, ResultsTable};
use spt_core::linguistics::MetricOptions;
use spt_core::training::{run_seeds, TrainConfig};

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let s = common::pretrained(0)?;
    let config = TrainConfig::default();
    let runs = run_seeds(&s.weights, &s.tokenizer, &s.corpus, &config, &common::languages(&s.corpus), &[0, 1, 2, 3])?;
    let mut results = ResultsTable::new();
    results.extend_from_runs(&runs)?;

    let report = correlation_table(&results, &s.profiles, &config.source_language, MetricOptions::default())?;
    print!("{}", report.to_csv()?);
    for cell in &report.rows[0].cells {
        println!("{}: computed over {:?}", cell.metric, cell.languages);
    }
    Ok(())
}
