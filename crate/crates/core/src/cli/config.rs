use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linguistics::MetricOptions;
use crate::model::ModelConfig;
use crate::training::{PretrainConfig, TrainConfig};

/// Environment variable that overrides [`ExperimentConfig::seed`].
pub const SEED_ENV: &str = "SPT_SEED";

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything one experiment reads, as a single JSON document.
///
/// The top-level `seed` drives model initialization, pretraining, corpus
/// generation and single-run training; `seeds` lists the repetitions used by
/// `eval` and `sweep-length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Generator input for `gen-corpus`.
    #[serde(default)]
    pub synthetic_spec: Option<PathBuf>,
    /// Defaults to `<out_dir>/corpus.jsonl`.
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Defaults to `<out_dir>/profiles.json`.
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    /// Languages to evaluate; all corpus languages when absent.
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    #[serde(default = "ModelConfig::smoke")]
    pub model: ModelConfig,
    #[serde(default)]
    pub pretrain: PretrainConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub metrics: MetricOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config uses defaults")
    }
}

impl ExperimentConfig {
    /// Parses a config document, applies `key=value` overrides (dotted keys,
    /// JSON or bare-string values) and then the seed from `env_seed`.
    pub fn resolve(document: Option<&str>, sets: &[String], env_seed: Option<&str>) -> Result<Self> {
        let mut value: Value = match document {
            Some(text) => serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?,
            None => Value::Object(Default::default()),
        };
        for set in sets {
            apply_override(&mut value, set)?;
        }
        let mut config: Self =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))?;
        if let Some(raw) = env_seed {
            config.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
        }
        config.train.seed = config.seed;
        config.pretrain.seed = config.seed;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (if any) and resolves it against the process environment.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self> {
        let text = path
            .map(|p| std::fs::read_to_string(p).map_err(|e| Error::io(p, e)))
            .transpose()?;
        let env = std::env::var(SEED_ENV).ok();
        Self::resolve(text.as_deref(), sets, env.as_deref())
    }

    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must list at least one seed".into()));
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| self.out("corpus.jsonl"))
    }

    pub fn profiles_path(&self) -> PathBuf {
        self.profiles.clone().unwrap_or_else(|| self.out("profiles.json"))
    }

    pub fn out(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }
}

fn apply_override(root: &mut Value, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {set:?} is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?} descends into a non-object")))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Config(format!("override {key:?} descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}
