//! Few-shot protocol: sampling, prompt tuning with best-epoch selection,
//! evaluation, multi-seed transfer runs and language-model pretraining.

mod config;
mod data;
mod evaluate;
mod fewshot;
pub mod optim;
mod pretrain;
mod seeds;
mod train;

pub use config::{Mode, TrainConfig};
pub use data::{encode_examples, EncodedExample};
pub use evaluate::{evaluate, predict};
pub use fewshot::{sample_few_shot, validation_shots, FewShotSplit};
pub use optim::{clip_grad_norm, optimizer_step, Adam};
pub use pretrain::{lm_sequences, perplexity, pretrain_lm, PretrainConfig, PretrainReport};
pub use seeds::{
    evaluate_targets, fresh_prompt, mean_std, run_seeds, run_transfer, summarize_seeds,
    text_budget, SeedSummary, TransferRun,
};
pub use train::{train, EpochRecord, RunManifest, TrainData, TrainOutcome};
