use serde::{Deserialize, Serialize};

use crate::corpus::Tokenizer;
use crate::error::{Error, Result};
use crate::numerics::{cross_entropy, Tape, Var};

/// Ordered label tokens `t₁ … t_K`; class `i` is predicted when `t_{i+1}`
/// has the largest logit among them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verbalizer {
    tokens: Vec<usize>,
}

impl Verbalizer {
    pub fn new(tokens: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Contract("verbalizer needs at least one token".into()));
        }
        for (i, &t) in tokens.iter().enumerate() {
            if t >= vocab_size {
                return Err(Error::Index {
                    what: "verbalizer token",
                    index: t,
                    limit: vocab_size,
                });
            }
            if tokens[..i].contains(&t) {
                return Err(Error::Contract(format!("verbalizer token {t} repeated")));
            }
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn num_classes(&self) -> usize {
        self.tokens.len()
    }

    /// Logits restricted to the verbalizer tokens, in class order.
    pub fn restrict(&self, logits: &[f32]) -> Vec<f32> {
        self.tokens.iter().map(|&t| logits[t]).collect()
    }

    /// Restricted argmax; ties go to the earliest class.
    pub fn classify(&self, logits: &[f32]) -> usize {
        let mut best = 0;
        for (i, &t) in self.tokens.iter().enumerate().skip(1) {
            if logits[t] > logits[self.tokens[best]] {
                best = i;
            }
        }
        best
    }

    /// Cross-entropy over the restricted logits.
    pub fn loss(&self, logits: &[f32], gold: usize) -> Result<f32> {
        self.check_gold(gold)?;
        cross_entropy(&self.restrict(logits), gold)
    }

    /// Tape version of [`Verbalizer::loss`] for a `1 × |V|` logit row.
    pub fn loss_on_tape(&self, tape: &mut Tape<'_>, logits: Var, gold: usize) -> Result<Var> {
        self.check_gold(gold)?;
        let restricted = tape.select_cols(logits, &self.tokens)?;
        tape.cross_entropy(restricted, &[gold])
    }

    fn check_gold(&self, gold: usize) -> Result<()> {
        if gold >= self.tokens.len() {
            return Err(Error::Index {
                what: "gold class",
                index: gold,
                limit: self.tokens.len(),
            });
        }
        Ok(())
    }
}

/// Verbalizer whose token for label `i` is the first tokenizer token of that label.
pub fn build_default_verbalizer(labels: &[&str], tokenizer: &Tokenizer) -> Result<Verbalizer> {
    let mut tokens = Vec::with_capacity(labels.len());
    for label in labels {
        let t = tokenizer.first_token(label).ok_or_else(|| {
            Error::Contract(format!(
                "label {label:?} has no in-vocabulary first token; supply a manual token"
            ))
        })?;
        tokens.push(t);
    }
    for i in 0..tokens.len() {
        let clash: Vec<String> = (0..tokens.len())
            .filter(|&j| tokens[j] == tokens[i])
            .map(|j| labels[j].to_string())
            .collect();
        if clash.len() > 1 {
            return Err(Error::VerbalizerCollision(clash));
        }
    }
    Verbalizer::new(tokens, tokenizer.len())
}

/// Shorthand for [`Verbalizer::classify`].
pub fn classify(logits: &[f32], v: &Verbalizer) -> usize {
    v.classify(logits)
}

/// Shorthand for [`Verbalizer::loss`].
pub fn verbalizer_loss(logits: &[f32], v: &Verbalizer, gold: usize) -> Result<f32> {
    v.loss(logits, gold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LABELS;

    #[test]
    fn direct_argmax_and_ties() {
        let v = Verbalizer::new(vec![5, 9], 10).unwrap();
        let mut l = vec![0.0; 10];
        l[5] = 2.0;
        l[9] = 1.0;
        assert_eq!(v.classify(&l), 0);
        l[9] = 2.0;
        assert_eq!(v.classify(&l), 0, "tie goes to earliest token");
        l[9] = 2.5;
        assert_eq!(v.classify(&l), 1);
    }

    #[test]
    fn loss_cases() {
        let v = Verbalizer::new(vec![1, 3], 4).unwrap();
        assert!((v.loss(&[7.0, 0.5, -2.0, 0.5], 1).unwrap() - 2f32.ln()).abs() < 1e-6);
        assert!(v.loss(&[0.0, 10.0, 0.0, 0.0], 0).unwrap() < 1e-3);
        assert!(matches!(v.loss(&[0.0; 4], 2), Err(Error::Index { .. })));
    }

    #[test]
    fn construction_errors() {
        assert!(Verbalizer::new(vec![1, 1], 4).is_err());
        assert!(Verbalizer::new(vec![4], 4).is_err());
        assert!(Verbalizer::new(vec![], 4).is_err());
    }

    #[test]
    fn default_verbalizer_from_labels() {
        let text = LABELS.join(" ");
        let tok = Tokenizer::from_texts([text.as_str()], 20).unwrap();
        let v = build_default_verbalizer(&LABELS, &tok).unwrap();
        assert_eq!(v.num_classes(), 7);
        for (i, label) in LABELS.iter().enumerate() {
            assert_eq!(tok.token(v.tokens()[i]), Some(*label));
        }

        let single = build_default_verbalizer(&["travel"], &tok).unwrap();
        assert_eq!(single.num_classes(), 1);
        assert_eq!(single.classify(&vec![0.3; tok.len()]), 0);
    }

    #[test]
    fn shared_first_token_is_a_collision() {
        let tok = Tokenizer::from_texts(["world news world sport"], 10).unwrap();
        match build_default_verbalizer(&["world news", "world sport"], &tok) {
            Err(Error::VerbalizerCollision(labels)) => {
                assert_eq!(labels, vec!["world news", "world sport"])
            }
            other => panic!("expected collision, got {other:?}"),
        }
    }
}
