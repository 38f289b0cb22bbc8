//! Mean zero-shot accuracy across languages as the soft prompt grows from 1
//! to 30 rows.
//!
//! cargo run --release --example length_sweep

mod common;

use spt_core::analysis::{length_sweep_report, sweep_csv, ResultsTable, Setting, SWEEP_LENGTHS};
use spt_core::training::{run_seeds, TrainConfig};

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let s = common::pretrained(0)?;
    let base = TrainConfig { epochs: 10, ..Default::default() };
    let targets = common::languages(&s.corpus);
    let mut results = ResultsTable::new();
    for n in SWEEP_LENGTHS {
        let config = TrainConfig { prompt_length: n, ..base.clone() };
        results.extend_from_runs(&run_seeds(&s.weights, &s.tokenizer, &s.corpus, &config, &targets, &[0, 1])?)?;
        eprintln!("prompt length {n} done");
    }
    let rows = length_sweep_report(&results, Setting::of(&base))?;
    print!("{}", sweep_csv(&rows)?);
    Ok(())
}
