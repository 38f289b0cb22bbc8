//! Few-shot prompt tuning on the pivot language followed by zero-shot
//! evaluation on every language, repeated over four seeds.
//!
//! Pass `without_mf` to fine-tune the model together with the prompt.
//!
//! cargo run --release --example transfer -- [with_mf|without_mf]

mod common;

use spt_core::training::{run_seeds, summarize_seeds, Mode, TrainConfig};

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let mode = match std::env::args().nth(1).as_deref() {
        None | Some("with_mf") => Mode::WithMf,
        Some("without_mf") => Mode::WithoutMf,
        Some(other) => return Err(spt_core::Error::Config(format!("unknown mode {other}"))),
    };
    let s = common::pretrained(0)?;
    let config = TrainConfig { mode, ..Default::default() };
    let targets = common::languages(&s.corpus);
    let runs = run_seeds(&s.weights, &s.tokenizer, &s.corpus, &config, &targets, &[0, 1, 2, 3])?;

    for run in &runs {
        let m = &run.manifest;
        println!(
            "seed {}: best epoch {} (validation {:.3}), {} trainable parameters, model CRC {:08x} -> {:08x}",
            run.seed, m.best_epoch, m.best_validation_accuracy, m.trainable_parameters, m.model_crc_before, m.model_crc_after
        );
    }
    println!("\n{:<6} {:>7} {:>7}", "lang", "mean", "std");
    for (lang, s) in summarize_seeds(&runs) {
        let marker = if lang == config.source_language { "  (pivot)" } else { "" };
        println!("{lang:<6} {:>7.3} {:>7.3}{marker}", s.mean, s.std);
    }
    Ok(())
}
