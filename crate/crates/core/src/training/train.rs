use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{clip_grad_norm, Adam};
use super::{evaluate, EncodedExample, Mode, TrainConfig};
use crate::error::{Error, Result};
use crate::model::checkpoint::file_crc;
use crate::model::{count_parameters, forward_hidden, readout_logits, TransformerWeights, Tracking};
use crate::numerics::{Parameter, Tape};
use crate::prompting::{TrainablePrompt, Verbalizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_accuracy: f64,
}

/// Everything needed to audit or reproduce one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub learning_rate: f32,
    pub corpus_digest: String,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    pub trainable_parameters: u64,
    /// CRC-32 of the model payload before and after the run.
    pub model_crc_before: u32,
    pub model_crc_after: u32,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    /// The manifest with wall-clock time zeroed; equal across reruns of the same inputs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Training and validation data for one run.
pub struct TrainData<'d> {
    pub train: &'d [EncodedExample],
    pub validation: &'d [EncodedExample],
    pub corpus_digest: String,
}

pub struct TrainOutcome {
    /// Prompt (and reparameterizer) state from the best validation epoch.
    pub prompt: TrainablePrompt,
    pub manifest: RunManifest,
}

fn payload_crc(w: &TransformerWeights) -> u32 {
    file_crc(&w.payload_bytes())
}

/// Few-shot prompt tuning with best-epoch selection on validation accuracy.
///
/// In [`Mode::WithMf`] the model is frozen for the run and left untouched.
/// In [`Mode::WithoutMf`] every model parameter trains and `weights` ends in
/// the state of the best epoch. Ties in validation accuracy keep the earliest
/// epoch.
pub fn train(
    weights: &mut TransformerWeights,
    mut prompt: TrainablePrompt,
    verbalizer: &Verbalizer,
    config: &TrainConfig,
    data: &TrainData<'_>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.train.is_empty() || data.validation.is_empty() {
        return Err(Error::Contract("training and validation sets must be nonempty".into()));
    }
    let d = weights.config().d_model;
    if prompt.prompt.dim() != d {
        return Err(Error::Dimension {
            op: "train prompt",
            lhs: prompt.prompt.embeddings.shape(),
            rhs: (prompt.len(), d),
        });
    }
    let started = Instant::now();
    let lr = config.learning_rate();
    let crc_before = payload_crc(weights);
    let was_frozen: Vec<bool> = weights.params().iter().map(|p| p.frozen).collect();
    weights.set_frozen(config.mode == Mode::WithMf);

    let result = run_epochs(weights, &mut prompt, verbalizer, config, data, lr);

    for (p, f) in weights.params_mut().iter_mut().zip(was_frozen) {
        p.frozen = f;
    }
    let (best_prompt, best_weights, epochs, best_epoch, best_acc) = result?;
    if let Some(w) = best_weights {
        *weights = w;
    }
    let crc_after = payload_crc(weights);
    if config.mode == Mode::WithMf && crc_before != crc_after {
        return Err(Error::Contract(
            "model weights changed during a frozen-model run".into(),
        ));
    }
    let trainable = count_parameters(
        weights.config(),
        config.mode == Mode::WithoutMf,
        prompt.len(),
        prompt.reparam.as_ref().map(|r| r.bottleneck()),
    );
    Ok(TrainOutcome {
        prompt: best_prompt,
        manifest: RunManifest {
            config: config.clone(),
            learning_rate: lr,
            corpus_digest: data.corpus_digest.clone(),
            seed: config.seed,
            best_epoch,
            best_validation_accuracy: best_acc,
            epochs,
            trainable_parameters: trainable,
            model_crc_before: crc_before,
            model_crc_after: crc_after,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

type EpochsResult = (
    TrainablePrompt,
    Option<TransformerWeights>,
    Vec<EpochRecord>,
    usize,
    f64,
);

fn run_epochs(
    weights: &mut TransformerWeights,
    prompt: &mut TrainablePrompt,
    verbalizer: &Verbalizer,
    config: &TrainConfig,
    data: &TrainData<'_>,
    lr: f32,
) -> Result<EpochsResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7472_6169_6e00);
    let mut adam = Adam::new(lr);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, TrainablePrompt, Option<TransformerWeights>)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            prompt.params_mut().into_iter().for_each(Parameter::zero_grad);
            weights.zero_grad();
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let ex = &data.train[i];
                let loss = accumulate_example(weights, prompt, verbalizer, config, ex, scale)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                        learning_rate: lr,
                    });
                }
                loss_sum += loss as f64;
            }
            let mut params: Vec<&mut Parameter> = prompt.params_mut();
            if config.mode == Mode::WithoutMf {
                params.extend(weights.params_mut().iter_mut());
            }
            if let Some(max) = config.clip_grad_norm {
                clip_grad_norm(&mut params, max);
            }
            adam.step(&mut params);
        }

        let effective = prompt.effective()?;
        let acc = evaluate(
            weights,
            Some(&effective),
            config.prompt_position,
            verbalizer,
            data.validation,
        )?;
        let train_loss = loss_sum / data.train.len() as f64;
        log::info!("epoch {epoch}: train loss {train_loss:.4}, validation accuracy {acc:.4}");
        records.push(EpochRecord {
            epoch,
            train_loss,
            validation_accuracy: acc,
        });
        if best.as_ref().is_none_or(|(_, b, _, _)| acc > *b) {
            let snapshot = (config.mode == Mode::WithoutMf).then(|| weights.clone());
            best = Some((epoch, acc, prompt.clone(), snapshot));
        }
    }
    let (best_epoch, best_acc, best_prompt, best_weights) = best.expect("epochs >= 1");
    Ok((best_prompt, best_weights, records, best_epoch, best_acc))
}

/// Forward + backward for one example; gradients (scaled by `scale`) are
/// added into the prompt and, when unfrozen, the model. Returns the unscaled loss.
fn accumulate_example(
    weights: &mut TransformerWeights,
    prompt: &mut TrainablePrompt,
    verbalizer: &Verbalizer,
    config: &TrainConfig,
    ex: &EncodedExample,
    scale: f32,
) -> Result<f32> {
    let (loss_value, grads, prompt_vars, model_vars) = {
        let mut tape = Tape::new();
        let pv = prompt.record(&mut tape)?;
        let f = forward_hidden(
            &mut tape,
            weights,
            &ex.tokens,
            Some(pv.effective),
            config.prompt_position,
            Tracking::Params,
        )?;
        let logits = readout_logits(&mut tape, &f)?;
        let loss = verbalizer.loss_on_tape(&mut tape, logits, ex.class)?;
        let value = tape.value(loss).get(0, 0);
        let scaled = tape.scale(loss, scale);
        let grads = tape.backward(scaled)?;
        (value, grads, pv, f.vars)
    };
    prompt.accumulate_grads(&grads, &prompt_vars);
    if config.mode == Mode::WithoutMf {
        weights.accumulate_grads(&grads, &model_vars);
    }
    Ok(loss_value)
}
