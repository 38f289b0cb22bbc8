//! One frozen-model training run that round-trips both checkpoints through
//! disk and shows the model file is untouched while the prompt file changes.
//!
//! cargo run --release --example frozen_checkpoint -- [out_dir]

mod common;

use std::path::Path;

use spt_core::corpus::LABELS;
use spt_core::model::checkpoint::file_crc;
use spt_core::model::{load_checkpoint, save_checkpoint};
use spt_core::prompting::{build_default_verbalizer, load_prompt, save_prompt};
use spt_core::training::{encode_examples, fresh_prompt, sample_few_shot, text_budget, train, TrainConfig, TrainData};
use spt_core::Error;

fn crc(path: &Path) -> spt_core::Result<u32> {
    Ok(file_crc(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn main() -> spt_core::Result<()> {
    common::init_logging();
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/example-frozen".into());
    let out = Path::new(&out);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let s = common::pretrained(0)?;
    let (model_path, prompt_path) = (out.join("model.ckpt"), out.join("prompt.ckpt"));
    save_checkpoint(&s.weights, &model_path)?;
    let mut weights = load_checkpoint(&model_path)?;

    let config = TrainConfig::default();
    let prompt = fresh_prompt(&weights, &config)?;
    save_prompt(&prompt, &prompt_path)?;
    let (model_before, prompt_before) = (crc(&model_path)?, crc(&prompt_path)?);

    let shots = sample_few_shot(&s.corpus, &config.source_language, config.k, config.seed)?;
    let budget = text_budget(&weights, config.prompt_length)?;
    let vocab = weights.config().vocab_size;
    let train_set = encode_examples(&s.tokenizer, &shots.train, budget, vocab)?;
    let validation = encode_examples(&s.tokenizer, &shots.validation, budget, vocab)?;
    let verbalizer = build_default_verbalizer(&LABELS, &s.tokenizer)?;
    let data = TrainData { train: &train_set, validation: &validation, corpus_digest: s.corpus.digest() };
    let outcome = train(&mut weights, prompt, &verbalizer, &config, &data)?;

    save_checkpoint(&weights, &model_path)?;
    save_prompt(&outcome.prompt, &prompt_path)?;
    println!("model.ckpt  CRC {model_before:08x} -> {:08x}", crc(&model_path)?);
    println!("prompt.ckpt CRC {prompt_before:08x} -> {:08x}", crc(&prompt_path)?);
    println!(
        "prompt.ckpt is {} bytes for {} trainable parameters",
        std::fs::metadata(&prompt_path).map_err(|e| Error::io(&prompt_path, e))?.len(),
        outcome.manifest.trainable_parameters
    );
    let reloaded = load_prompt(&prompt_path)?;
    assert_eq!(reloaded.effective()?, outcome.prompt.effective()?);
    println!("{}", serde_json::to_string_pretty(&outcome.manifest.epochs).expect("serializable"));
    Ok(())
}
