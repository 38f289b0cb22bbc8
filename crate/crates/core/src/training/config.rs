use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PromptPosition;
use crate::prompting::PromptInit;

/// Whether the model weights are trained alongside the prompt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Model frozen; only the prompt (and reparameterizer) train.
    #[default]
    WithMf,
    /// Every parameter trains.
    WithoutMf,
}

impl Mode {
    pub fn default_learning_rate(self) -> f32 {
        match self {
            Mode::WithMf => 0.1,
            Mode::WithoutMf => 5e-6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::WithMf => "with_mf",
            Mode::WithoutMf => "without_mf",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with_mf" => Ok(Mode::WithMf),
            "without_mf" => Ok(Mode::WithoutMf),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

fn default_k() -> usize {
    8
}
fn default_batch_size() -> usize {
    8
}
fn default_epochs() -> usize {
    20
}
fn default_prompt_length() -> usize {
    10
}
fn default_source() -> String {
    "eng".into()
}

/// Few-shot prompt-tuning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub mode: Mode,
    /// Shots per class.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// `None` means the mode's default (0.1 frozen, 5e-6 unfrozen).
    #[serde(default)]
    pub learning_rate: Option<f32>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_prompt_length")]
    pub prompt_length: usize,
    /// Bottleneck width of the residual reparameterizer, if any.
    #[serde(default)]
    pub reparam: Option<usize>,
    #[serde(default = "default_source")]
    pub source_language: String,
    #[serde(default)]
    pub prompt_init: PromptInit,
    #[serde(default)]
    pub prompt_position: PromptPosition,
    /// Global gradient-norm clipping threshold (1.0 when enabled from the CLI).
    #[serde(default)]
    pub clip_grad_norm: Option<f32>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            k: default_k(),
            batch_size: default_batch_size(),
            learning_rate: None,
            epochs: default_epochs(),
            seed: 0,
            prompt_length: default_prompt_length(),
            reparam: None,
            source_language: default_source(),
            prompt_init: PromptInit::default(),
            prompt_position: PromptPosition::default(),
            clip_grad_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn learning_rate(&self) -> f32 {
        self.learning_rate
            .unwrap_or_else(|| self.mode.default_learning_rate())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("epochs", self.epochs),
            ("prompt_length", self.prompt_length),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let lr = self.learning_rate();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {lr} must be positive")));
        }
        if self.reparam == Some(0) {
            return Err(Error::Config("reparameterizer bottleneck must be positive".into()));
        }
        if let Some(c) = self.clip_grad_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::Config(format!("clip threshold {c} must be positive")));
            }
        }
        Ok(())
    }
}
