use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::{mean_std, Mode, TrainConfig, TransferRun};

/// The experimental condition a result was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Setting {
    pub mode: Mode,
    pub prompt_length: usize,
    pub reparam: Option<usize>,
    pub k: usize,
}

impl Setting {
    pub fn of(config: &TrainConfig) -> Self {
        Self {
            mode: config.mode,
            prompt_length: config.prompt_length,
            reparam: config.reparam,
            k: config.k,
        }
    }

    /// The same setting without a reparameterizer.
    pub fn plain(self) -> Self {
        Self { reparam: None, ..self }
    }
}

impl fmt::Display for Setting {
    /// `with_mf/n10/k8`, or `with_mf/n10/m64/k8` with a reparameterizer.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/n{}", self.mode, self.prompt_length)?;
        if let Some(m) = self.reparam {
            write!(f, "/m{m}")?;
        }
        write!(f, "/k{}", self.k)
    }
}

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunRecord {
    language: String,
    seed: u64,
    mode: Mode,
    prompt_length: usize,
    reparam: Option<usize>,
    k: usize,
    accuracy: f64,
}

/// Accuracy per (language, seed, setting).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    rows: BTreeMap<(Setting, String, u64), f64>,
}

impl ResultsTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one result. Duplicate keys and accuracies outside `[0, 1]` are rejected.
    pub fn insert(&mut self, language: &str, seed: u64, setting: Setting, accuracy: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::Contract(format!(
                "accuracy {accuracy} for {language} (seed {seed}, {setting}) is outside [0, 1]"
            )));
        }
        let key = (setting, language.to_string(), seed);
        if self.rows.contains_key(&key) {
            return Err(Error::Contract(format!(
                "duplicate result for {language} (seed {seed}, {setting})"
            )));
        }
        self.rows.insert(key, accuracy);
        Ok(())
    }

    /// Adds every language of every run under the run's own setting.
    pub fn extend_from_runs(&mut self, runs: &[TransferRun]) -> Result<()> {
        for run in runs {
            let setting = Setting::of(&run.manifest.config);
            for (lang, &acc) in &run.accuracy {
                self.insert(lang, run.seed, setting, acc)?;
            }
        }
        Ok(())
    }

    /// Drops every row recorded under `setting`.
    pub fn remove_setting(&mut self, setting: Setting) {
        self.rows.retain(|(s, _, _), _| *s != setting);
    }

    /// Adds all rows of `other`, replacing any setting it contains.
    pub fn merge(&mut self, other: &ResultsTable) -> Result<()> {
        for s in other.settings() {
            self.remove_setting(s);
        }
        for (s, lang, seed, acc) in other.iter() {
            self.insert(lang, seed, s, acc)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, language: &str, seed: u64, setting: Setting) -> Option<f64> {
        self.rows.get(&(setting, language.to_string(), seed)).copied()
    }

    /// `(setting, language, seed, accuracy)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (Setting, &str, u64, f64)> {
        self.rows.iter().map(|((s, l, seed), &a)| (*s, l.as_str(), *seed, a))
    }

    pub fn settings(&self) -> BTreeSet<Setting> {
        self.rows.keys().map(|(s, _, _)| *s).collect()
    }

    pub fn languages(&self, setting: Setting) -> BTreeSet<&str> {
        self.iter()
            .filter(|(s, ..)| *s == setting)
            .map(|(_, l, ..)| l)
            .collect()
    }

    /// Raw table as CSV: `language,seed,mode,prompt_length,reparam,k,accuracy`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (setting, language, seed, accuracy) in self.iter() {
            w.serialize(RunRecord {
                language: language.to_string(),
                seed,
                mode: setting.mode,
                prompt_length: setting.prompt_length,
                reparam: setting.reparam,
                k: setting.k,
                accuracy,
            })
            .map_err(csv_error)?;
        }
        finish(w)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut table = Self::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (i, record) in reader.deserialize::<RunRecord>().enumerate() {
            let r = record.map_err(|e| Error::Schema(format!("runs table row {}: {e}", i + 1)))?;
            let setting = Setting {
                mode: r.mode,
                prompt_length: r.prompt_length,
                reparam: r.reparam,
                k: r.k,
            };
            table.insert(&r.language, r.seed, setting, r.accuracy)?;
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::model::checkpoint::write_file(path.as_ref(), self.to_csv()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Schema(format!("csv: {e}"))
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Schema(format!("csv: {}", e.error())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Seed statistics for one (language, setting).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub language: String,
    pub setting: Setting,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Mean and sample standard deviation over seeds for every (language, setting).
pub fn aggregate(results: &ResultsTable) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(Error::Contract("cannot aggregate an empty results table".into()));
    }
    let mut groups: BTreeMap<(Setting, &str), Vec<f64>> = BTreeMap::new();
    for (setting, lang, _, acc) in results.iter() {
        groups.entry((setting, lang)).or_default().push(acc);
    }
    Ok(groups
        .into_iter()
        .map(|((setting, language), xs)| {
            let (mean, std) = mean_std(&xs);
            AggregateRow {
                language: language.to_string(),
                setting,
                mean,
                std,
                seeds: xs.len(),
            }
        })
        .collect())
}

/// `results.csv`: `language,setting,mean,std`.
pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["language", "setting", "mean", "std"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.language.clone(),
            r.setting.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setting() -> Setting {
        Setting::of(&TrainConfig::default())
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        let mut t = ResultsTable::new();
        t.insert("eng", 1, setting(), 0.5).unwrap();
        assert!(matches!(t.insert("eng", 1, setting(), 0.6), Err(Error::Contract(_))));
        assert!(matches!(t.insert("deu", 1, setting(), 1.5), Err(Error::Contract(_))));
        assert!(matches!(aggregate(&ResultsTable::new()), Err(Error::Contract(_))));
    }

    #[test]
    fn aggregate_matches_hand_computation() {
        let mut t = ResultsTable::new();
        for (seed, acc) in [(1, 0.5), (2, 0.6), (3, 0.7), (4, 0.8)] {
            t.insert("eng", seed, setting(), acc).unwrap();
        }
        t.insert("fra", 1, setting(), 0.42).unwrap();
        let rows = aggregate(&t).unwrap();
        assert!((rows[0].mean - 0.65).abs() < 1e-12);
        assert!((rows[0].std - 0.1291).abs() < 1e-4);
        assert_eq!((rows[1].mean, rows[1].std), (0.42, 0.0));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = ResultsTable::new();
        let m = Setting { reparam: Some(16), ..setting() };
        t.insert("eng", 3, setting(), 0.1 + 0.2).unwrap();
        t.insert("fin", 0, m, 1.0 / 3.0).unwrap();
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("language,seed,mode,prompt_length,reparam,k,accuracy\n"));
        assert_eq!(ResultsTable::from_csv(&text).unwrap(), t);
        assert_eq!(m.to_string(), "with_mf/n10/m16/k8");
    }
}
