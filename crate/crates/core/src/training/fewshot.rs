use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Example, Split, LABELS};
use crate::error::{Error, Result};

/// Class-balanced training and validation examples drawn from one language's train split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotSplit {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
}

/// Validation examples per class for `k` shots: `ceil(k / 4)`.
pub fn validation_shots(k: usize) -> usize {
    k.div_ceil(4)
}

/// Draws `k` training and `ceil(k/4)` validation examples per class from the
/// train split of `language`, disjoint and shuffled with `seed`.
pub fn sample_few_shot(corpus: &Corpus, language: &str, k: usize, seed: u64) -> Result<FewShotSplit> {
    if k == 0 {
        return Err(Error::Contract("k must be at least 1".into()));
    }
    let pool = corpus.split(language, Split::Train)?;
    let per_class_val = validation_shots(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(k * LABELS.len());
    let mut validation = Vec::with_capacity(per_class_val * LABELS.len());
    for (class, label) in LABELS.iter().enumerate() {
        let mut members: Vec<&Example> = pool.iter().filter(|e| e.class() == class).collect();
        if members.len() < k + per_class_val {
            return Err(Error::Capacity(format!(
                "class {label:?} in {language} has {} train examples, {k}-shot needs {}",
                members.len(),
                k + per_class_val
            )));
        }
        members.shuffle(&mut rng);
        train.extend(members[..k].iter().map(|&e| e.clone()));
        validation.extend(members[k..k + per_class_val].iter().map(|&e| e.clone()));
    }
    train.shuffle(&mut rng);
    validation.shuffle(&mut rng);
    Ok(FewShotSplit { train, validation })
}
