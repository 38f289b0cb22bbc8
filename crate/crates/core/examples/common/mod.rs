//! Setup shared by the examples: the bundled ten-language synthetic corpus
//! and a small model pretrained on it.
#![allow(dead_code)]

use spt_core::corpus::{generate_synthetic, Corpus, SyntheticSpec, Tokenizer};
use spt_core::linguistics::LanguageProfile;
use spt_core::model::{ModelConfig, TransformerWeights};
use spt_core::training::{pretrain_lm, PretrainConfig};
use spt_core::Result;

pub const SPEC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/smoke_spec.json");

pub struct Setup {
    pub corpus: Corpus,
    pub profiles: Vec<LanguageProfile>,
    pub tokenizer: Tokenizer,
    pub weights: TransformerWeights,
}

pub fn corpus(seed: u64) -> Result<(Corpus, Vec<LanguageProfile>)> {
    generate_synthetic(&SyntheticSpec::load(SPEC)?, seed)
}

pub fn pretrained(seed: u64) -> Result<Setup> {
    let (corpus, profiles) = corpus(seed)?;
    let config = ModelConfig::smoke();
    let tokenizer = Tokenizer::build(&corpus, config.vocab_size)?;
    let mut weights = TransformerWeights::init(config, seed)?;
    let report = pretrain_lm(&mut weights, &corpus, &tokenizer, &PretrainConfig { seed, ..Default::default() })?;
    eprintln!(
        "pretrained: held-out perplexity {:.2} -> {:.2}",
        report.perplexity[0],
        report.perplexity.last().unwrap()
    );
    Ok(Setup { corpus, profiles, tokenizer, weights })
}

pub fn languages(corpus: &Corpus) -> Vec<String> {
    corpus.languages().map(str::to_string).collect()
}

/// Silences the per-language split-size warnings unless `RUST_LOG` says otherwise.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).try_init();
}
