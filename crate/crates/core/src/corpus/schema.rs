use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The seven topic categories, in class-index order.
pub const LABELS: [&str; 7] = [
    "science/technology",
    "travel",
    "politics",
    "sports",
    "health",
    "entertainment",
    "geography",
];

/// Split sizes of the reference topic-classification benchmark.
pub const EXPECTED_SPLIT_SIZES: (usize, usize, usize) = (701, 99, 204);

pub fn label_index(label: &str) -> Option<usize> {
    LABELS.iter().position(|&l| l == label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One labelled text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub label: String,
    pub language: String,
}

impl Example {
    pub fn new(text: impl Into<String>, label: &str, language: impl Into<String>) -> Result<Self> {
        if label_index(label).is_none() {
            return Err(Error::Schema(format!("unknown label {label:?}")));
        }
        Ok(Self {
            text: text.into(),
            label: label.to_string(),
            language: language.into(),
        })
    }

    /// Class index of the label. Labels are validated on construction and ingestion.
    pub fn class(&self) -> usize {
        label_index(&self.label).expect("validated label")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LanguageSplits {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    pub test: Vec<Example>,
}

impl LanguageSplits {
    pub fn get(&self, split: Split) -> &[Example] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, split: Split) -> &mut Vec<Example> {
        match split {
            Split::Train => &mut self.train,
            Split::Validation => &mut self.validation,
            Split::Test => &mut self.test,
        }
    }
}

/// Per-language train/validation/test splits, ordered by language code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    languages: BTreeMap<String, LanguageSplits>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, split: Split, example: Example) {
        self.languages
            .entry(example.language.clone())
            .or_default()
            .get_mut(split)
            .push(example);
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.languages.keys().map(String::as_str)
    }

    pub fn language(&self, code: &str) -> Option<&LanguageSplits> {
        self.languages.get(code)
    }

    pub fn split(&self, code: &str, split: Split) -> Result<&[Example]> {
        self.languages
            .get(code)
            .map(|s| s.get(split))
            .ok_or_else(|| Error::Contract(format!("language {code:?} not in corpus")))
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    /// Every example with its split, in language then split order.
    pub fn iter(&self) -> impl Iterator<Item = (Split, &Example)> {
        self.languages.values().flat_map(|s| {
            Split::ALL
                .into_iter()
                .flat_map(move |sp| s.get(sp).iter().map(move |e| (sp, e)))
        })
    }

    /// Warnings for languages whose split sizes differ from the reference 701/99/204.
    pub fn split_size_warnings(&self) -> Vec<String> {
        let (tr, va, te) = EXPECTED_SPLIT_SIZES;
        self.languages
            .iter()
            .filter_map(|(code, s)| {
                let got = (s.train.len(), s.validation.len(), s.test.len());
                (got != (tr, va, te)).then(|| {
                    format!(
                        "language {code}: split sizes {}/{}/{} differ from expected {tr}/{va}/{te}",
                        got.0, got.1, got.2
                    )
                })
            })
            .collect()
    }

    /// SHA-256 over every (split, language, label, text) record, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (split, e) in self.iter() {
            for field in [split.as_str(), &e.language, &e.label, &e.text] {
                h.update((field.len() as u64).to_le_bytes());
                h.update(field.as_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
