//! Prints the six linguistic distances from a source language to every
//! language of the bundled profiles.
//!
//! cargo run --example distances -- [source]

mod common;

use spt_core::cli::distance_table_csv;
use spt_core::linguistics::{distance, Metric, MetricOptions};

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let source = std::env::args().nth(1).unwrap_or_else(|| "eng".into());
    let (_, profiles) = common::corpus(0)?;
    print!("{}", distance_table_csv(&profiles, &source, MetricOptions::default())?);

    let with_geo_gen = MetricOptions { featural_geo_gen: true, ..Default::default() };
    let src = profiles.iter().find(|p| p.code == source).expect("checked above");
    println!("\nFEA with the GEO and GEN blocks included:");
    for p in &profiles {
        match distance(Metric::Fea, src, p, with_geo_gen) {
            Ok(d) => println!("  {:<4} {d:.4}", p.code),
            Err(e) => println!("  {:<4} NA ({e})", p.code),
        }
    }
    Ok(())
}
