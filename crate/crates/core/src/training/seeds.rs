use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{encode_examples, evaluate, sample_few_shot, train, RunManifest, TrainConfig, TrainData};
use crate::corpus::{Corpus, Split, Tokenizer, LABELS};
use crate::error::{Error, Result};
use crate::model::TransformerWeights;
use crate::prompting::{
    build_default_verbalizer, init_prompt, Reparameterizer, TrainablePrompt, Verbalizer,
};

/// One seed of source-language prompt tuning followed by zero-shot
/// evaluation on each target language's test split.
pub struct TransferRun {
    pub seed: u64,
    pub manifest: RunManifest,
    pub prompt: TrainablePrompt,
    /// Model weights after training; `Some` only when the model was unfrozen.
    pub tuned_weights: Option<TransformerWeights>,
    pub accuracy: BTreeMap<String, f64>,
}

/// Mean and sample standard deviation of a language's accuracy across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Builds a fresh trainable prompt for `config`, seeded from `config.seed`.
pub fn fresh_prompt(weights: &TransformerWeights, config: &TrainConfig) -> Result<TrainablePrompt> {
    let soft = init_prompt(
        weights,
        config.prompt_length,
        config.prompt_init,
        config.seed.wrapping_add(1),
    )?;
    let reparam = config
        .reparam
        .map(|m| Reparameterizer::new(weights.config().d_model, m, config.seed.wrapping_add(2)))
        .transpose()?;
    TrainablePrompt::new(soft, reparam)
}

/// Longest text that still fits next to the prompt.
pub fn text_budget(weights: &TransformerWeights, prompt_length: usize) -> Result<usize> {
    let max_seq = weights.config().max_seq;
    if prompt_length >= max_seq {
        return Err(Error::Capacity(format!(
            "prompt length {prompt_length} leaves no room for text within max_seq {max_seq}"
        )));
    }
    Ok(max_seq - prompt_length)
}

/// Trains on `config.source_language` and evaluates on the test split of every language in `targets`.
pub fn run_transfer(
    weights: &TransformerWeights,
    tokenizer: &Tokenizer,
    corpus: &Corpus,
    config: &TrainConfig,
    targets: &[String],
) -> Result<TransferRun> {
    config.validate()?;
    let verbalizer = build_default_verbalizer(&LABELS, tokenizer)?;
    let vocab = weights.config().vocab_size;
    let budget = text_budget(weights, config.prompt_length)?;
    let shots = sample_few_shot(corpus, &config.source_language, config.k, config.seed)?;
    let train_set = encode_examples(tokenizer, &shots.train, budget, vocab)?;
    let val_set = encode_examples(tokenizer, &shots.validation, budget, vocab)?;

    let mut tuned = weights.clone();
    let prompt = fresh_prompt(&tuned, config)?;
    let data = TrainData {
        train: &train_set,
        validation: &val_set,
        corpus_digest: corpus.digest(),
    };
    let outcome = train(&mut tuned, prompt, &verbalizer, config, &data)?;
    let accuracy = evaluate_targets(&tuned, &outcome.prompt, &verbalizer, tokenizer, corpus, config, targets)?;
    Ok(TransferRun {
        seed: config.seed,
        manifest: outcome.manifest,
        prompt: outcome.prompt,
        tuned_weights: (config.mode == super::Mode::WithoutMf).then_some(tuned),
        accuracy,
    })
}

/// Test-split accuracy of a trained prompt on each target language.
///
/// Languages are evaluated in parallel on the current rayon pool.
pub fn evaluate_targets(
    weights: &TransformerWeights,
    prompt: &TrainablePrompt,
    verbalizer: &Verbalizer,
    tokenizer: &Tokenizer,
    corpus: &Corpus,
    config: &TrainConfig,
    targets: &[String],
) -> Result<BTreeMap<String, f64>> {
    let effective = prompt.effective()?;
    let budget = text_budget(weights, prompt.len())?;
    let vocab = weights.config().vocab_size;
    targets
        .par_iter()
        .map(|lang| {
            let test = encode_examples(tokenizer, corpus.split(lang, Split::Test)?, budget, vocab)?;
            let acc = evaluate(weights, Some(&effective), config.prompt_position, verbalizer, &test)?;
            log::info!("{lang}: test accuracy {acc:.4}");
            Ok((lang.clone(), acc))
        })
        .collect()
}

/// Runs [`run_transfer`] once per seed.
pub fn run_seeds(
    weights: &TransformerWeights,
    tokenizer: &Tokenizer,
    corpus: &Corpus,
    config: &TrainConfig,
    targets: &[String],
    seeds: &[u64],
) -> Result<Vec<TransferRun>> {
    seeds
        .iter()
        .map(|&seed| {
            let c = TrainConfig {
                seed,
                ..config.clone()
            };
            run_transfer(weights, tokenizer, corpus, &c, targets)
        })
        .collect()
}

/// Per-language mean and sample standard deviation (0 for a single seed).
pub fn summarize_seeds(runs: &[TransferRun]) -> BTreeMap<String, SeedSummary> {
    let mut by_lang: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for (lang, &acc) in &run.accuracy {
            by_lang.entry(lang).or_default().push(acc);
        }
    }
    by_lang
        .into_iter()
        .map(|(lang, xs)| {
            let (mean, std) = mean_std(&xs);
            (lang.to_string(), SeedSummary { mean, std, n: xs.len() })
        })
        .collect()
}

/// Mean and sample (n − 1) standard deviation; the deviation is 0 for fewer than two values.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_standard_deviation() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        // Sum of squared deviations is 32 over 7 degrees of freedom.
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
