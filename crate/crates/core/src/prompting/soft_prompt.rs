use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TransformerWeights;
use crate::numerics::{Parameter, Tensor2D};

/// How a fresh soft prompt is filled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptInit {
    /// Copies of distinct, randomly chosen token-embedding rows.
    #[default]
    VocabSample,
    /// `N(0, 0.02²)` entries.
    Gaussian,
}

impl std::str::FromStr for PromptInit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vocab_sample" => Ok(Self::VocabSample),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::Config(format!("unknown prompt init {other:?}"))),
        }
    }
}

/// An `n × d` matrix of trainable input embeddings. Never frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPrompt {
    pub embeddings: Parameter,
    pub init: PromptInit,
}

impl SoftPrompt {
    pub fn from_tensor(t: Tensor2D, init: PromptInit) -> Self {
        Self {
            embeddings: Parameter::new(t),
            init,
        }
    }

    pub fn len(&self) -> usize {
        self.embeddings.value.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.embeddings.value.cols()
    }
}

pub fn init_prompt(
    model: &TransformerWeights,
    n: usize,
    init: PromptInit,
    seed: u64,
) -> Result<SoftPrompt> {
    if n == 0 {
        return Err(Error::Contract("prompt length must be at least 1".into()));
    }
    let c = model.config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = match init {
        PromptInit::VocabSample => {
            if n > c.vocab_size {
                return Err(Error::Capacity(format!(
                    "cannot sample {n} distinct rows from a vocabulary of {}",
                    c.vocab_size
                )));
            }
            let table = &model.token_embedding().value;
            let mut out = Tensor2D::zeros(n, c.d_model);
            for (i, id) in rand::seq::index::sample(&mut rng, c.vocab_size, n)
                .into_iter()
                .enumerate()
            {
                out.row_mut(i).copy_from_slice(table.row(id));
            }
            out
        }
        PromptInit::Gaussian => {
            let normal = Normal::new(0.0f32, crate::model::INIT_STD).expect("valid std");
            let data = (0..n * c.d_model).map(|_| normal.sample(&mut rng)).collect();
            Tensor2D::from_vec(n, c.d_model, data)?
        }
    };
    Ok(SoftPrompt::from_tensor(t, init))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn model() -> TransformerWeights {
        let c = ModelConfig {
            n_layers: 1,
            d_model: 512,
            n_heads: 4,
            d_ff: 8,
            vocab_size: 30,
            max_seq: 8,
        };
        TransformerWeights::init(c, 1).unwrap()
    }

    #[test]
    fn same_seed_same_prompt() {
        let m = model();
        for init in [PromptInit::VocabSample, PromptInit::Gaussian] {
            assert_eq!(init_prompt(&m, 5, init, 9).unwrap(), init_prompt(&m, 5, init, 9).unwrap());
        }
        assert_ne!(
            init_prompt(&m, 5, PromptInit::Gaussian, 9).unwrap(),
            init_prompt(&m, 5, PromptInit::Gaussian, 10).unwrap()
        );
    }

    #[test]
    fn vocab_sample_rows_come_from_the_table() {
        let m = model();
        let p = init_prompt(&m, 12, PromptInit::VocabSample, 4).unwrap();
        let table = &m.token_embedding().value;
        let mut used = Vec::new();
        for r in 0..p.len() {
            let hit = (0..table.rows())
                .find(|&i| table.row(i) == p.embeddings.value.row(r))
                .expect("row copied from the table");
            used.push(hit);
        }
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 12, "rows are distinct");
        assert!(matches!(
            init_prompt(&m, 31, PromptInit::VocabSample, 0),
            Err(Error::Capacity(_))
        ));
        assert!(init_prompt(&m, 0, PromptInit::Gaussian, 0).is_err());
    }

    #[test]
    fn gaussian_mean_within_three_standard_errors() {
        let p = init_prompt(&model(), 20, PromptInit::Gaussian, 2024).unwrap();
        let data = p.embeddings.value.data();
        let n = data.len() as f64;
        assert_eq!(n, 20.0 * 512.0);
        let mean = data.iter().map(|&v| v as f64).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 * 0.02 / n.sqrt(), "mean {mean}");
        let var = data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.02).abs() < 0.002);
    }
}
