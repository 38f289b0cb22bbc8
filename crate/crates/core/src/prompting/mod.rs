//! Soft prompts, the residual reparameterizer, and verbalizer classification.

pub mod checkpoint;
mod reparam;
mod soft_prompt;
mod verbalizer;

pub use checkpoint::{load_prompt, save_prompt};
pub use reparam::{reparameterize, PromptVars, Reparameterizer, TrainablePrompt};
pub use soft_prompt::{init_prompt, PromptInit, SoftPrompt};
pub use verbalizer::{build_default_verbalizer, classify, verbalizer_loss, Verbalizer};
