use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Split, LABELS};
use crate::error::{Error, Result};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
const SPECIALS: usize = 2;

/// Word-level whitespace tokenizer over a frequency-ranked vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TokenizerFile", into = "TokenizerFile")]
pub struct Tokenizer {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TokenizerFile {
    vocab: Vec<String>,
}

impl From<TokenizerFile> for Tokenizer {
    fn from(f: TokenizerFile) -> Self {
        Tokenizer::from_vocab(f.vocab)
    }
}

impl From<Tokenizer> for TokenizerFile {
    fn from(t: Tokenizer) -> Self {
        TokenizerFile { vocab: t.vocab }
    }
}

impl Tokenizer {
    fn from_vocab(vocab: Vec<String>) -> Self {
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { vocab, index }
    }

    /// Keeps the `vocab_size − 2` most frequent words (ties broken
    /// lexicographically) after `<pad>` and `<unk>`.
    pub fn from_texts<'t>(texts: impl IntoIterator<Item = &'t str>, vocab_size: usize) -> Result<Self> {
        if vocab_size <= SPECIALS {
            return Err(Error::Capacity(format!(
                "vocab_size {vocab_size} leaves no room beyond the {SPECIALS} special tokens"
            )));
        }
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for text in texts {
            for w in text.split_whitespace() {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut vocab = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        vocab.extend(
            ranked
                .into_iter()
                .filter(|(w, _)| *w != PAD_TOKEN && *w != UNK_TOKEN)
                .take(vocab_size - SPECIALS)
                .map(|(w, _)| w.to_string()),
        );
        Ok(Self::from_vocab(vocab))
    }

    /// Builds the vocabulary from every language's train split.
    pub fn build(corpus: &Corpus, vocab_size: usize) -> Result<Self> {
        let minimum = SPECIALS + LABELS.len();
        if vocab_size <= minimum {
            return Err(Error::Capacity(format!(
                "vocab_size {vocab_size} must exceed {minimum} (special tokens + label tokens)"
            )));
        }
        let texts = corpus
            .iter()
            .filter(|(s, _)| *s == Split::Train)
            .map(|(_, e)| e.text.as_str());
        Self::from_texts(texts, vocab_size)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.vocab.get(id).map(String::as_str)
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        text.split_whitespace()
            .map(|w| self.id(w).unwrap_or(UNK_ID))
            .collect()
    }

    /// Encodes and checks every id fits a model vocabulary of `limit`.
    pub fn encode_within(&self, text: &str, limit: usize) -> Result<Vec<usize>> {
        let ids = self.encode(text);
        if let Some(&bad) = ids.iter().find(|&&id| id >= limit) {
            return Err(Error::Index {
                what: "encoded token id (model vocab_size)",
                index: bad,
                limit,
            });
        }
        Ok(ids)
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// First token of `text`, or `None` when it is empty or out of vocabulary.
    pub fn first_token(&self, text: &str) -> Option<usize> {
        text.split_whitespace().next().and_then(|w| self.id(w))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        crate::model::checkpoint::write_file(path.as_ref(), json.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_corpus_vocabulary() {
        let t = Tokenizer::from_texts(["a a b"], 4).unwrap();
        assert_eq!(t.vocab(), &["<pad>", "<unk>", "a", "b"]);
        assert_eq!(t.encode("b a zebra"), vec![3, 2, UNK_ID]);
        assert_eq!(t.decode(&[2, 3]), "a b");
    }

    #[test]
    fn frequency_order_matches_brute_force_count() {
        let texts = ["x y z y", "z z w y", "q x z"];
        let t = Tokenizer::from_texts(texts, 5).unwrap();
        let mut words: Vec<&str> = texts.iter().flat_map(|s| s.split(' ')).collect();
        words.sort();
        words.dedup();
        let count = |w: &str| texts.iter().map(|s| s.split(' ').filter(|&x| x == w).count()).sum::<usize>();
        let mut expected: Vec<&str> = words.clone();
        expected.sort_by(|a, b| count(b).cmp(&count(a)).then(a.cmp(b)));
        assert_eq!(&t.vocab()[2..], &expected[..3]);
        assert_eq!(&t.vocab()[2..], &["z", "y", "x"]);
    }

    #[test]
    fn too_small_vocab_is_a_capacity_error() {
        assert!(matches!(Tokenizer::from_texts(["a"], 2), Err(Error::Capacity(_))));
        assert!(matches!(Tokenizer::build(&Corpus::new(), 9), Err(Error::Capacity(_))));
    }

    #[test]
    fn in_vocabulary_text_round_trips_and_json_persists() {
        let t = Tokenizer::from_texts(["the cat sat on the mat"], 10).unwrap();
        let text = "the mat sat";
        assert_eq!(t.decode(&t.encode(text)), text);
        let back: Tokenizer = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(t.encode_within("the cat", 3).is_err());
    }
}
