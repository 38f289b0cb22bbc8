//! Trains prompts with and without the residual reparameterizer and reports
//! the per-language percent change in zero-shot accuracy.
//!
//! cargo run --release --example reparameterization -- [bottleneck]

mod common;

use spt_core::analysis::{impact_csv, impact_from_results, ResultsTable};
use spt_core::model::count_parameters;
use spt_core::prompting::{reparameterize, Reparameterizer};
use spt_core::numerics::Tensor2D;
use spt_core::training::{run_seeds, TrainConfig};

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let m: usize = std::env::args().nth(1).map_or(Ok(16), |a| a.parse()).expect("bottleneck width");
    let s = common::pretrained(0)?;
    let d = s.weights.config().d_model;

    // At initialization the reparameterizer passes the prompt through unchanged.
    let r = Reparameterizer::new(d, m, 0)?;
    let probe = Tensor2D::filled(3, d, 0.25);
    assert_eq!(reparameterize(&r, &probe)?, probe);

    let plain = TrainConfig::default();
    let reparam = TrainConfig { reparam: Some(m), ..plain.clone() };
    for c in [&plain, &reparam] {
        println!("n = {}, m = {:?}: {} trainable parameters", c.prompt_length, c.reparam, count_parameters(s.weights.config(), false, c.prompt_length, c.reparam));
    }
    let targets = common::languages(&s.corpus);
    let mut results = ResultsTable::new();
    for c in [&plain, &reparam] {
        results.extend_from_runs(&run_seeds(&s.weights, &s.tokenizer, &s.corpus, c, &targets, &[0, 1, 2, 3])?)?;
    }
    print!("{}", impact_csv(&impact_from_results(&results)?)?);
    Ok(())
}
