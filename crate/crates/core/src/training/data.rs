use crate::corpus::{Example, Tokenizer};
use crate::error::{Error, Result};

/// An example as token ids plus its class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub tokens: Vec<usize>,
    pub class: usize,
}

/// Encodes `examples`, keeping at most `max_tokens` leading tokens of each text.
///
/// Every id must fit a model vocabulary of `vocab_size`.
pub fn encode_examples(
    tokenizer: &Tokenizer,
    examples: &[Example],
    max_tokens: usize,
    vocab_size: usize,
) -> Result<Vec<EncodedExample>> {
    if max_tokens == 0 {
        return Err(Error::Capacity(
            "prompt leaves no room for text within max_seq".into(),
        ));
    }
    examples
        .iter()
        .map(|e| {
            let mut tokens = tokenizer.encode_within(&e.text, vocab_size)?;
            tokens.truncate(max_tokens);
            if tokens.is_empty() {
                tokens.push(crate::corpus::UNK_ID.min(vocab_size - 1));
            }
            Ok(EncodedExample {
                tokens,
                class: e.class(),
            })
        })
        .collect()
}
