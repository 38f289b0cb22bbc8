use super::EncodedExample;
use crate::error::{Error, Result};
use crate::model::{forward_logits_at, PromptPosition, TransformerWeights};
use crate::numerics::Tensor2D;
use crate::prompting::Verbalizer;

/// Predicted class for every example.
pub fn predict(
    weights: &TransformerWeights,
    prompt: Option<&Tensor2D>,
    position: PromptPosition,
    verbalizer: &Verbalizer,
    examples: &[EncodedExample],
) -> Result<Vec<usize>> {
    examples
        .iter()
        .map(|e| {
            let logits = forward_logits_at(weights, &e.tokens, prompt, position)?;
            Ok(verbalizer.classify(&logits))
        })
        .collect()
}

/// Fraction of examples whose verbalized prediction equals the gold class.
pub fn evaluate(
    weights: &TransformerWeights,
    prompt: Option<&Tensor2D>,
    position: PromptPosition,
    verbalizer: &Verbalizer,
    examples: &[EncodedExample],
) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Contract("cannot evaluate on an empty split".into()));
    }
    let predictions = predict(weights, prompt, position, verbalizer, examples)?;
    let correct = predictions
        .iter()
        .zip(examples)
        .filter(|(p, e)| **p == e.class)
        .count();
    Ok(correct as f64 / examples.len() as f64)
}
