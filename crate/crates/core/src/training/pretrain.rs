use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{clip_grad_norm, Adam};
use crate::corpus::{Corpus, Split, Tokenizer};
use crate::error::{Error, Result};
use crate::model::{forward_hidden, PromptPosition, TransformerWeights, Tracking};
use crate::numerics::{Parameter, Tape};

fn default_epochs() -> usize {
    3
}
fn default_lr() -> f32 {
    1e-3
}
fn default_batch() -> usize {
    16
}
fn default_clip() -> Option<f32> {
    Some(1.0)
}

/// Language-model pretraining hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f32,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_clip")]
    pub clip_grad_norm: Option<f32>,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            seed: 0,
            clip_grad_norm: default_clip(),
        }
    }
}

/// Held-out perplexity before training (index 0) and after each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub perplexity: Vec<f64>,
    pub train_loss: Vec<f64>,
}

/// Encodes texts for language modelling: truncated to `max_seq`, sequences
/// shorter than two tokens dropped.
pub fn lm_sequences<'t>(
    tokenizer: &Tokenizer,
    texts: impl IntoIterator<Item = &'t str>,
    max_seq: usize,
    vocab_size: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for text in texts {
        let mut ids = tokenizer.encode_within(text, vocab_size)?;
        ids.truncate(max_seq);
        if ids.len() >= 2 {
            out.push(ids);
        }
    }
    Ok(out)
}

/// Mean next-token cross-entropy of one sequence, recorded on `tape`.
fn sequence_loss<'a>(
    tape: &mut Tape<'a>,
    w: &'a TransformerWeights,
    seq: &[usize],
    tracking: Tracking,
) -> Result<(crate::numerics::Var, crate::model::ModelVars)> {
    let f = forward_hidden(tape, w, seq, None, PromptPosition::Append, tracking)?;
    let inputs = tape.slice_rows(f.hidden, 0, seq.len() - 1)?;
    let logits = tape.matmul_nt(inputs, f.vars.vars()[0])?;
    let loss = tape.cross_entropy(logits, &seq[1..])?;
    Ok((loss, f.vars))
}

/// Token-weighted perplexity over `sequences`.
pub fn perplexity(w: &TransformerWeights, sequences: &[Vec<usize>]) -> Result<f64> {
    if sequences.is_empty() {
        return Err(Error::Contract("perplexity needs at least one sequence".into()));
    }
    let mut nll = 0.0f64;
    let mut count = 0usize;
    for seq in sequences {
        let mut tape = Tape::new();
        let (loss, _) = sequence_loss(&mut tape, w, seq, Tracking::Inference)?;
        let predicted = seq.len() - 1;
        nll += tape.value(loss).get(0, 0) as f64 * predicted as f64;
        count += predicted;
    }
    Ok((nll / count as f64).exp())
}

/// Next-token pretraining on every language's train split; perplexity is
/// measured on the validation splits.
pub fn pretrain_lm(
    weights: &mut TransformerWeights,
    corpus: &Corpus,
    tokenizer: &Tokenizer,
    config: &PretrainConfig,
) -> Result<PretrainReport> {
    if config.batch_size == 0 || config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::Config("pretraining needs batch_size >= 1 and a positive learning rate".into()));
    }
    let c = *weights.config();
    let texts = |split: Split| {
        corpus
            .iter()
            .filter(move |(s, _)| *s == split)
            .map(|(_, e)| e.text.as_str())
    };
    let train = lm_sequences(tokenizer, texts(Split::Train), c.max_seq, c.vocab_size)?;
    let held_out = lm_sequences(tokenizer, texts(Split::Validation), c.max_seq, c.vocab_size)?;
    if train.is_empty() {
        return Err(Error::Contract("no train text of two or more tokens to pretrain on".into()));
    }
    let measure = |w: &TransformerWeights| -> Result<f64> {
        if held_out.is_empty() {
            Ok(f64::NAN)
        } else {
            perplexity(w, &held_out)
        }
    };

    let mut report = PretrainReport {
        perplexity: vec![measure(weights)?],
        train_loss: Vec::new(),
    };
    log::info!("pretrain epoch 0: held-out perplexity {:.3}", report.perplexity[0]);

    let was_frozen = weights.is_frozen();
    weights.set_frozen(false);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(config.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            weights.zero_grad();
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let (value, grads, vars) = {
                    let mut tape = Tape::new();
                    let (loss, vars) = sequence_loss(&mut tape, weights, &train[i], Tracking::Params)?;
                    let value = tape.value(loss).get(0, 0);
                    let scaled = tape.scale(loss, scale);
                    (value, tape.backward(scaled)?, vars)
                };
                if !value.is_finite() {
                    weights.set_frozen(was_frozen);
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                        learning_rate: config.learning_rate,
                    });
                }
                loss_sum += value as f64;
                weights.accumulate_grads(&grads, &vars);
            }
            let mut params: Vec<&mut Parameter> = weights.params_mut().iter_mut().collect();
            if let Some(max) = config.clip_grad_norm {
                clip_grad_norm(&mut params, max);
            }
            adam.step(&mut params);
        }
        let ppl = measure(weights)?;
        let mean_loss = loss_sum / train.len() as f64;
        log::info!("pretrain epoch {epoch}: train loss {mean_loss:.4}, held-out perplexity {ppl:.3}");
        report.perplexity.push(ppl);
        report.train_loss.push(mean_loss);
    }
    weights.set_frozen(was_frozen);
    weights.zero_grad();
    Ok(report)
}
