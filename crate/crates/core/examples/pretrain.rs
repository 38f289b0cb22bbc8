//! Generates the synthetic multilingual corpus, builds a tokenizer and
//! pretrains a small causal language model on it, reporting held-out
//! perplexity per epoch. Writes the checkpoint to the given directory.
//!
//! cargo run --release --example pretrain -- [out_dir]

mod common;

use spt_core::corpus::Tokenizer;
use spt_core::model::{load_checkpoint, save_checkpoint, ModelConfig, TransformerWeights};
use spt_core::training::{pretrain_lm, PretrainConfig};

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/example-pretrain".into());
    std::fs::create_dir_all(&out).map_err(|e| spt_core::Error::io(&out, e))?;

    let (corpus, _) = common::corpus(0)?;
    println!("corpus: {} examples in {} languages, digest {}", corpus.len(), corpus.languages().count(), &corpus.digest()[..12]);
    let config = ModelConfig::smoke();
    let tokenizer = Tokenizer::build(&corpus, config.vocab_size)?;
    let mut weights = TransformerWeights::init(config, 0)?;
    println!("model: {} parameters", weights.num_parameters());

    let report = pretrain_lm(&mut weights, &corpus, &tokenizer, &PretrainConfig { epochs: 4, ..Default::default() })?;
    for (epoch, ppl) in report.perplexity.iter().enumerate() {
        let loss = epoch.checked_sub(1).map(|e| format!("{:.4}", report.train_loss[e])).unwrap_or_default();
        println!("epoch {epoch}: held-out perplexity {ppl:8.3}  train loss {loss}");
    }

    let path = std::path::Path::new(&out).join("model.ckpt");
    save_checkpoint(&weights, &path)?;
    tokenizer.save(std::path::Path::new(&out).join("tokenizer.json"))?;
    let reloaded = load_checkpoint(&path)?;
    assert_eq!(reloaded.payload_bytes(), weights.payload_bytes());
    println!("wrote {} and reloaded it bit-for-bit", path.display());
    Ok(())
}
