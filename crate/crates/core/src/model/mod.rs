//! Decoder-only causal transformer with a tied LM head.
//!
//! Pre-norm blocks, learned absolute positions, GELU feed-forward, no linear
//! biases. Soft-prompt rows are injected as input embeddings and receive the
//! positional embedding of the slot they occupy.

pub mod checkpoint;
mod config;
mod forward;
mod weights;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{ModelConfig, PromptPosition};
pub use forward::{
    check_input, forward_hidden, forward_logits, forward_logits_at, hidden_states,
    readout_logits, Forward, ModelVars, Tracking,
};
pub use weights::{tensor_shapes, LayerView, TransformerWeights, INIT_STD, LAYER_TENSORS};

/// Parameter count of a model configuration.
pub fn model_parameters(c: &ModelConfig) -> u64 {
    tensor_shapes(c)
        .iter()
        .map(|(_, (r, k))| (*r * *k) as u64)
        .sum()
}

/// Trainable (or total) parameters for a soft prompt of `prompt_length` rows,
/// optionally reparameterized through a bottleneck of width `reparam`.
///
/// With `include_frozen = false` this is the prompt-tuning budget:
/// `n·d`, plus `d·m + m·d + 2d` for the reparameterizer.
pub fn count_parameters(
    c: &ModelConfig,
    include_frozen: bool,
    prompt_length: usize,
    reparam: Option<usize>,
) -> u64 {
    let d = c.d_model as u64;
    let mut n = prompt_length as u64 * d;
    if let Some(m) = reparam {
        n += 2 * d * m as u64 + 2 * d;
    }
    if include_frozen {
        n += model_parameters(c);
    }
    n
}
