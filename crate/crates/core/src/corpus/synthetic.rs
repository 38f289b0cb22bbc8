//! Seeded multilingual topic corpus with a known language family tree.
//!
//! Every language draws texts from the same topic-conditioned word
//! distribution. Words start in the pivot language's form and drift along
//! the family tree: each tree edge independently replaces a word's form with
//! probability `mutation_rate`. Languages that sit further from the pivot in
//! the tree therefore share fewer word types with it, which ties transfer
//! difficulty to genealogical distance.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Example, Split, LABELS};
use crate::error::{Error, Result};
use crate::linguistics::LanguageProfile;

const FUNCTION_WORDS: [&str; 16] = [
    "the", "of", "and", "a", "to", "in", "is", "for", "on", "with", "that", "by", "as", "at",
    "from", "it",
];

const TOPIC_WORDS: [[&str; 10]; 7] = [
    [
        "science/technology", "research", "computer", "energy", "laboratory", "software",
        "physics", "engine", "data", "robot",
    ],
    [
        "travel", "hotel", "flight", "tourist", "journey", "beach", "passport", "museum",
        "ferry", "luggage",
    ],
    [
        "politics", "election", "government", "minister", "parliament", "vote", "policy",
        "party", "law", "president",
    ],
    [
        "sports", "match", "team", "goal", "player", "coach", "league", "stadium", "score",
        "race",
    ],
    [
        "health", "doctor", "hospital", "disease", "medicine", "patient", "vaccine", "nurse",
        "diet", "virus",
    ],
    [
        "entertainment", "film", "music", "actor", "concert", "festival", "album", "theatre",
        "star", "show",
    ],
    [
        "geography", "river", "mountain", "island", "desert", "ocean", "climate", "valley",
        "region", "lake",
    ],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train: 140,
            validation: 14,
            test: 70,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthRange {
    pub min: usize,
    pub max: usize,
}

impl Default for LengthRange {
    fn default() -> Self {
        Self { min: 10, max: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticLanguage {
    pub code: String,
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub syntax: Vec<Option<f64>>,
    #[serde(default)]
    pub phonology: Vec<Option<f64>>,
    #[serde(default)]
    pub inventory: Vec<Option<f64>>,
    /// Scales the train split (and thus the pre-training data) of this language.
    #[serde(default = "one")]
    pub corpus_weight: f64,
}

fn one() -> f64 {
    1.0
}
fn default_topic_words() -> usize {
    8
}
fn default_function_words() -> usize {
    12
}
fn default_topic_ratio() -> f64 {
    0.6
}
fn default_mutation_rate() -> f64 {
    0.25
}

/// Generator input. `tree` maps every node to its parent (`null` for the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub pivot: String,
    pub tree: BTreeMap<String, Option<String>>,
    pub languages: Vec<SyntheticLanguage>,
    #[serde(default)]
    pub split_sizes: SplitSizes,
    #[serde(default)]
    pub text_length: LengthRange,
    #[serde(default = "default_topic_words")]
    pub topic_words: usize,
    #[serde(default = "default_function_words")]
    pub function_words: usize,
    #[serde(default = "default_topic_ratio")]
    pub topic_ratio: f64,
    #[serde(default = "default_mutation_rate")]
    pub mutation_rate: f64,
}

impl SyntheticSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))
    }

    /// Structural checks: a single-rooted acyclic tree containing every language.
    pub fn validate(&self) -> Result<()> {
        let spec_err = |m: String| Err(Error::Spec(m));
        if self.languages.len() < 2 {
            return spec_err(format!("need at least 2 languages, got {}", self.languages.len()));
        }
        let mut codes = BTreeSet::new();
        for l in &self.languages {
            if !codes.insert(l.code.as_str()) {
                return spec_err(format!("duplicate language {}", l.code));
            }
            if !self.tree.contains_key(&l.code) {
                return spec_err(format!("language {} is not a node of the tree", l.code));
            }
            if !(l.corpus_weight > 0.0 && l.corpus_weight.is_finite()) {
                return spec_err(format!("language {}: corpus_weight must be positive", l.code));
            }
        }
        if !codes.contains(self.pivot.as_str()) {
            return spec_err(format!("pivot {} is not among the languages", self.pivot));
        }
        for (node, parent) in &self.tree {
            if let Some(p) = parent {
                if !self.tree.contains_key(p) {
                    return spec_err(format!("orphan node {node}: parent {p} is not in the tree"));
                }
            }
        }
        let roots: Vec<&String> = self
            .tree
            .iter()
            .filter(|(_, p)| p.is_none())
            .map(|(n, _)| n)
            .collect();
        for node in self.tree.keys() {
            let mut seen = vec![node.as_str()];
            let mut cur = node;
            while let Some(Some(p)) = self.tree.get(cur) {
                if let Some(pos) = seen.iter().position(|s| *s == p) {
                    let mut cycle: Vec<&str> = seen[pos..].to_vec();
                    cycle.push(p);
                    return spec_err(format!("cycle in tree: {}", cycle.join(" -> ")));
                }
                seen.push(p);
                cur = p;
            }
        }
        if roots.len() != 1 {
            return spec_err(format!(
                "tree must have exactly one root, found {:?}",
                roots
            ));
        }
        if self.text_length.min == 0 || self.text_length.max < self.text_length.min {
            return spec_err(format!("invalid text_length {:?}", self.text_length));
        }
        if self.topic_words == 0 || self.function_words == 0 {
            return spec_err("topic_words and function_words must be positive".into());
        }
        for (name, v) in [("topic_ratio", self.topic_ratio), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return spec_err(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.split_sizes.train < LABELS.len() {
            return spec_err(format!(
                "train split of {} cannot hold one example per topic",
                self.split_sizes.train
            ));
        }
        Ok(())
    }

    /// Root-to-node path.
    pub fn lineage(&self, node: &str) -> Vec<String> {
        let mut path = vec![node.to_string()];
        let mut cur = node;
        while let Some(Some(p)) = self.tree.get(cur) {
            path.push(p.clone());
            cur = p;
        }
        path.reverse();
        path
    }

    fn train_size(&self, lang: &SyntheticLanguage) -> usize {
        ((self.split_sizes.train as f64 * lang.corpus_weight).round() as usize).max(LABELS.len())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED, |h, &p| splitmix(h ^ p))
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn pseudo_word(mut h: u64) -> String {
    const C: &[u8] = b"bdfgklmnprstvz";
    const V: &[u8] = b"aeiou";
    let syllables = 2 + (h % 2) as usize;
    h /= 2;
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(C[(h % C.len() as u64) as usize] as char);
        h /= C.len() as u64;
        w.push(V[(h % V.len() as u64) as usize] as char);
        h /= V.len() as u64;
    }
    w
}

/// The pivot-language word list: function words, then `topic_words` per topic
/// (the first of which is the topic label itself).
fn pivot_lexicon(spec: &SyntheticSpec) -> (Vec<String>, Vec<Vec<usize>>, Vec<usize>) {
    let mut words = Vec::new();
    let function: Vec<usize> = (0..spec.function_words)
        .map(|i| {
            words.push(match FUNCTION_WORDS.get(i) {
                Some(w) => w.to_string(),
                None => format!("fn{i}"),
            });
            words.len() - 1
        })
        .collect();
    let topics = TOPIC_WORDS
        .iter()
        .map(|list| {
            (0..spec.topic_words)
                .map(|i| {
                    words.push(match list.get(i) {
                        Some(w) => w.to_string(),
                        None => format!("{}{i}", list[1]),
                    });
                    words.len() - 1
                })
                .collect()
        })
        .collect();
    (words, topics, function)
}

/// Word forms per tree node, derived outward from the pivot.
fn derive_forms(spec: &SyntheticSpec, seed: u64, pivot_words: &[String]) -> BTreeMap<String, Vec<String>> {
    let mut neighbours: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (node, parent) in &spec.tree {
        neighbours.entry(node).or_default();
        if let Some(p) = parent {
            neighbours.entry(node).or_default().insert(p);
            neighbours.entry(p).or_default().insert(node);
        }
    }
    let mut used: HashSet<String> = pivot_words.iter().cloned().collect();
    let mut forms: BTreeMap<String, Vec<String>> = BTreeMap::new();
    forms.insert(spec.pivot.clone(), pivot_words.to_vec());
    let mut queue = VecDeque::from([spec.pivot.as_str()]);
    while let Some(from) = queue.pop_front() {
        for &to in &neighbours[from] {
            if forms.contains_key(to) {
                continue;
            }
            // An edge is named by its child endpoint.
            let edge = if spec.tree[to].as_deref() == Some(from) { to } else { from };
            let parent_forms = forms[from].clone();
            let mut next = Vec::with_capacity(parent_forms.len());
            for (w, form) in parent_forms.into_iter().enumerate() {
                let h = mix(&[seed, w as u64, fnv1a(edge)]);
                if unit(h) < spec.mutation_rate {
                    let mut salt = 0u64;
                    let fresh = loop {
                        let cand = pseudo_word(mix(&[h, salt]));
                        if used.insert(cand.clone()) {
                            break cand;
                        }
                        salt += 1;
                    };
                    next.push(fresh);
                } else {
                    next.push(form);
                }
            }
            forms.insert(to.to_string(), next);
            queue.push_back(to);
        }
    }
    forms
}

/// Generates the corpus and a profile per language. Deterministic in `seed`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(Corpus, Vec<LanguageProfile>)> {
    spec.validate()?;
    let (pivot_words, topics, function) = pivot_lexicon(spec);
    let forms = derive_forms(spec, seed, &pivot_words);

    let mut languages: Vec<&SyntheticLanguage> = spec.languages.iter().collect();
    languages.sort_by(|a, b| a.code.cmp(&b.code));

    let mut corpus = Corpus::new();
    let mut profiles = Vec::new();
    for lang in languages {
        let lexicon = &forms[&lang.code];
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, fnv1a(&lang.code)]));
        let mut train_tokens = 0usize;
        for split in Split::ALL {
            let n = match split {
                Split::Train => spec.train_size(lang),
                Split::Validation => spec.split_sizes.validation,
                Split::Test => spec.split_sizes.test,
            };
            let mut order: Vec<usize> = (0..n).map(|i| i % LABELS.len()).collect();
            order.shuffle(&mut rng);
            for topic in order {
                let len = rng.random_range(spec.text_length.min..=spec.text_length.max);
                let words: Vec<&str> = (0..len)
                    .map(|_| {
                        let w = if rng.random::<f64>() < spec.topic_ratio {
                            topics[topic][rng.random_range(0..topics[topic].len())]
                        } else {
                            function[rng.random_range(0..function.len())]
                        };
                        lexicon[w].as_str()
                    })
                    .collect();
                if split == Split::Train {
                    train_tokens += words.len();
                }
                corpus.push(split, Example::new(words.join(" "), LABELS[topic], lang.code.clone())?);
            }
        }
        let profile = LanguageProfile {
            code: lang.code.clone(),
            syntax: lang.syntax.clone(),
            phonology: lang.phonology.clone(),
            inventory: lang.inventory.clone(),
            latitude: lang.latitude,
            longitude: lang.longitude,
            lineage: spec.lineage(&lang.code),
            pretrain_tokens: train_tokens as f64,
        };
        profile
            .validate()
            .map_err(|e| Error::Spec(e.to_string()))?;
        profiles.push(profile);
    }
    Ok((corpus, profiles))
}

/// Jaccard overlap of the word types in two languages' train splits.
pub fn type_overlap(corpus: &Corpus, a: &str, b: &str) -> Result<f64> {
    let types = |code: &str| -> Result<BTreeSet<String>> {
        Ok(corpus
            .split(code, Split::Train)?
            .iter()
            .flat_map(|e| e.text.split_whitespace().map(str::to_string))
            .collect())
    };
    let (ta, tb) = (types(a)?, types(b)?);
    let union = ta.union(&tb).count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(ta.intersection(&tb).count() as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_spec() -> SyntheticSpec {
        let lang = |code: &str, lat: f64, lon: f64| SyntheticLanguage {
            code: code.into(),
            latitude: lat,
            longitude: lon,
            syntax: vec![Some(1.0), Some(0.0)],
            phonology: vec![Some(0.5)],
            inventory: vec![Some(1.0)],
            corpus_weight: 1.0,
        };
        let tree = [
            ("root", None),
            ("west", Some("root")),
            ("east", Some("root")),
            ("piv", Some("west")),
            ("sib", Some("west")),
            ("far", Some("east")),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.map(str::to_string)))
        .collect();
        SyntheticSpec {
            pivot: "piv".into(),
            tree,
            languages: vec![lang("piv", 50.0, 0.0), lang("sib", 48.0, 5.0), lang("far", 10.0, 100.0)],
            split_sizes: SplitSizes {
                train: 70,
                validation: 14,
                test: 21,
            },
            text_length: LengthRange::default(),
            topic_words: 8,
            function_words: 12,
            topic_ratio: 0.6,
            mutation_rate: 0.25,
        }
    }

    #[test]
    fn generation_is_deterministic_and_balanced() {
        let spec = small_spec();
        let (a, pa) = generate_synthetic(&spec, 7).unwrap();
        let (b, pb) = generate_synthetic(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
        assert_ne!(generate_synthetic(&spec, 8).unwrap().0, a);
        for code in a.languages() {
            for split in Split::ALL {
                let ex = a.split(code, split).unwrap();
                let mut counts = [0usize; 7];
                ex.iter().for_each(|e| counts[e.class()] += 1);
                let mean = ex.len() as f64 / 7.0;
                assert!(counts.iter().all(|&c| (c as f64 - mean).abs() <= 1.0), "{counts:?}");
            }
        }
        let piv = pa.iter().find(|p| p.code == "piv").unwrap();
        assert_eq!(piv.lineage, vec!["root", "west", "piv"]);
        assert!(piv.pretrain_tokens >= 70.0 * 10.0);
    }

    #[test]
    fn overlap_decays_with_tree_distance() {
        let (c, _) = generate_synthetic(&small_spec(), 3).unwrap();
        assert_eq!(type_overlap(&c, "piv", "piv").unwrap(), 1.0);
        let sib = type_overlap(&c, "piv", "sib").unwrap();
        let far = type_overlap(&c, "piv", "far").unwrap();
        assert!(far < sib, "far {far} vs sibling {sib}");
    }

    #[test]
    fn malformed_trees_are_rejected() {
        let mut cyclic = small_spec();
        cyclic.tree.insert("root".into(), Some("piv".into()));
        let msg = cyclic.validate().unwrap_err().to_string();
        assert!(msg.contains("cycle"), "{msg}");

        let mut orphan = small_spec();
        orphan.tree.insert("far".into(), Some("nowhere".into()));
        assert!(orphan.validate().unwrap_err().to_string().contains("orphan"));

        let mut lonely = small_spec();
        lonely.languages.truncate(1);
        assert!(matches!(generate_synthetic(&lonely, 0), Err(Error::Spec(_))));
    }
}
