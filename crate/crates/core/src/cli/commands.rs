use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::analysis::{
    aggregate, aggregate_csv, correlation_table, impact_csv, impact_from_results,
    length_sweep_report, sweep_csv, CorrelationReport, ResultsTable, Setting, SweepRow,
    SWEEP_LENGTHS,
};
use crate::corpus::{
    generate_synthetic, load_corpus, save_jsonl, Corpus, SyntheticSpec, Tokenizer,
};
use crate::error::{Error, Result};
use crate::linguistics::{distance, load_profiles, save_profiles, LanguageProfile, Metric, MetricOptions};
use crate::model::checkpoint::{file_crc, model_to_bytes, write_file};
use crate::model::{load_checkpoint, save_checkpoint, TransformerWeights};
use crate::prompting::{build_default_verbalizer, save_prompt};
use crate::training::{
    encode_examples, fresh_prompt, pretrain_lm, run_seeds, sample_few_shot, text_budget, train,
    Mode, PretrainReport, RunManifest, TrainData,
};
use crate::corpus::LABELS;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.ckpt";
pub const TUNED_MODEL_FILE: &str = "model.tuned.ckpt";
pub const PROMPT_FILE: &str = "prompt.ckpt";
pub const TOKENIZER_FILE: &str = "tokenizer.json";
pub const RUNS_FILE: &str = "runs.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const IMPACT_FILE: &str = "impact.csv";
pub const DISTANCES_FILE: &str = "distances.csv";

/// What one command read and wrote. `manifest.json` maps command names to these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub config: ExperimentConfig,
    /// Output file name → CRC-32 of its bytes.
    pub outputs: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrain: Option<PretrainReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunManifest>,
}

impl CommandRecord {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            outputs: BTreeMap::new(),
            corpus_digest: None,
            pretrain: None,
            runs: Vec::new(),
        }
    }
}

/// Writes `bytes` to `<out_dir>/<name>` and records its CRC.
fn emit(config: &ExperimentConfig, record: &mut CommandRecord, name: &str, bytes: &[u8]) -> Result<()> {
    write_file(&config.out(name), bytes)?;
    record.outputs.insert(name.to_string(), file_crc(bytes));
    log::info!("wrote {}", config.out(name).display());
    Ok(())
}

/// Stores `record` under `command` in the output directory's manifest.
fn write_manifest(config: &ExperimentConfig, command: &str, record: CommandRecord) -> Result<()> {
    let path = config.out(MANIFEST_FILE);
    let mut all: BTreeMap<String, serde_json::Value> = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_else(|e| {
            log::warn!("replacing unreadable {}: {e}", path.display());
            BTreeMap::new()
        }),
        Err(_) => BTreeMap::new(),
    };
    all.insert(command.to_string(), serde_json::to_value(record)?);
    let text = serde_json::to_string_pretty(&all)? + "\n";
    write_file(&path, text.as_bytes())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn targets(config: &ExperimentConfig, corpus: &Corpus) -> Vec<String> {
    config
        .targets
        .clone()
        .unwrap_or_else(|| corpus.languages().map(str::to_string).collect())
}

struct Loaded {
    corpus: Corpus,
    tokenizer: Tokenizer,
    weights: TransformerWeights,
}

fn load_trained_inputs(config: &ExperimentConfig) -> Result<Loaded> {
    let corpus = load_corpus(config.corpus_path())?;
    let tokenizer = Tokenizer::load(config.out(TOKENIZER_FILE))?;
    let weights = load_checkpoint(config.out(MODEL_FILE))?;
    if weights.config() != &config.model {
        log::warn!(
            "model section of the config differs from {}; using the checkpoint's",
            config.out(MODEL_FILE).display()
        );
    }
    Ok(Loaded {
        corpus,
        tokenizer,
        weights,
    })
}

/// Generates the synthetic corpus and language profiles into the output directory.
pub fn cmd_gen_corpus(config: &ExperimentConfig) -> Result<(Corpus, Vec<LanguageProfile>)> {
    let spec_path = config
        .synthetic_spec
        .as_ref()
        .ok_or_else(|| Error::Config("gen-corpus needs synthetic_spec".into()))?;
    let spec = SyntheticSpec::load(spec_path)?;
    let (corpus, profiles) = generate_synthetic(&spec, config.seed)?;
    let corpus_path = config.corpus_path();
    let profiles_path = config.profiles_path();
    save_jsonl(&corpus, &corpus_path)?;
    save_profiles(&profiles, &profiles_path)?;
    let mut record = CommandRecord::new(config);
    for p in [&corpus_path, &profiles_path] {
        let name = p
            .file_name()
            .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        record.outputs.insert(name, file_crc(&read_bytes(p)?));
    }
    record.corpus_digest = Some(corpus.digest());
    write_manifest(config, "gen-corpus", record)?;
    Ok((corpus, profiles))
}

/// Builds the tokenizer, pretrains the model and writes both.
pub fn cmd_pretrain(config: &ExperimentConfig) -> Result<PretrainReport> {
    let corpus = load_corpus(config.corpus_path())?;
    let tokenizer = Tokenizer::build(&corpus, config.model.vocab_size)?;
    let mut weights = TransformerWeights::init(config.model, config.seed)?;
    let report = pretrain_lm(&mut weights, &corpus, &tokenizer, &config.pretrain)?;
    let mut record = CommandRecord::new(config);
    let tok_json = serde_json::to_string_pretty(&tokenizer)? + "\n";
    emit(config, &mut record, TOKENIZER_FILE, tok_json.as_bytes())?;
    save_checkpoint(&weights, config.out(MODEL_FILE))?;
    record
        .outputs
        .insert(MODEL_FILE.into(), file_crc(&read_bytes(&config.out(MODEL_FILE))?));
    record.corpus_digest = Some(corpus.digest());
    record.pretrain = Some(report.clone());
    write_manifest(config, "pretrain", record)?;
    Ok(report)
}

/// One few-shot training run on the source language; writes the prompt checkpoint.
pub fn cmd_train(config: &ExperimentConfig) -> Result<RunManifest> {
    let Loaded {
        corpus,
        tokenizer,
        mut weights,
    } = load_trained_inputs(config)?;
    let on_disk = read_bytes(&config.out(MODEL_FILE))?;
    let tc = &config.train;
    let verbalizer = build_default_verbalizer(&LABELS, &tokenizer)?;
    let vocab = weights.config().vocab_size;
    let budget = text_budget(&weights, tc.prompt_length)?;
    let shots = sample_few_shot(&corpus, &tc.source_language, tc.k, tc.seed)?;
    let train_set = encode_examples(&tokenizer, &shots.train, budget, vocab)?;
    let val_set = encode_examples(&tokenizer, &shots.validation, budget, vocab)?;
    let prompt = fresh_prompt(&weights, tc)?;
    let data = TrainData {
        train: &train_set,
        validation: &val_set,
        corpus_digest: corpus.digest(),
    };
    let outcome = train(&mut weights, prompt, &verbalizer, tc, &data)?;

    if tc.mode == Mode::WithMf && model_to_bytes(&weights) != on_disk {
        return Err(Error::Contract(
            "frozen-model training changed the model checkpoint; no outputs written".into(),
        ));
    }
    let mut record = CommandRecord::new(config);
    save_prompt(&outcome.prompt, config.out(PROMPT_FILE))?;
    record
        .outputs
        .insert(PROMPT_FILE.into(), file_crc(&read_bytes(&config.out(PROMPT_FILE))?));
    if tc.mode == Mode::WithoutMf {
        save_checkpoint(&weights, config.out(TUNED_MODEL_FILE))?;
        record.outputs.insert(
            TUNED_MODEL_FILE.into(),
            file_crc(&read_bytes(&config.out(TUNED_MODEL_FILE))?),
        );
    }
    record.corpus_digest = Some(corpus.digest());
    record.runs.push(outcome.manifest.clone());
    write_manifest(config, "train", record)?;
    Ok(outcome.manifest)
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Adds `fresh` to the runs table on disk and rewrites `runs.csv` and `results.csv`.
fn store_results(config: &ExperimentConfig, record: &mut CommandRecord, fresh: &ResultsTable) -> Result<ResultsTable> {
    let path = config.out(RUNS_FILE);
    let mut table = if path.exists() {
        ResultsTable::load(&path)?
    } else {
        ResultsTable::new()
    };
    table.merge(fresh)?;
    emit(config, record, RUNS_FILE, table.to_csv()?.as_bytes())?;
    emit(config, record, RESULTS_FILE, aggregate_csv(&aggregate(&table)?)?.as_bytes())?;
    Ok(table)
}

fn seeded_runs(
    config: &ExperimentConfig,
    loaded: &Loaded,
    train: &crate::training::TrainConfig,
    record: &mut CommandRecord,
    table: &mut ResultsTable,
) -> Result<()> {
    let langs = targets(config, &loaded.corpus);
    let runs = run_seeds(
        &loaded.weights,
        &loaded.tokenizer,
        &loaded.corpus,
        train,
        &langs,
        &config.seeds,
    )?;
    table.extend_from_runs(&runs)?;
    record.runs.extend(runs.into_iter().map(|r| r.manifest));
    Ok(())
}

/// Trains and evaluates once per seed; languages are evaluated on up to `jobs` threads.
pub fn cmd_eval(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ResultsTable> {
    let loaded = load_trained_inputs(config)?;
    let mut record = CommandRecord::new(config);
    let mut fresh = ResultsTable::new();
    thread_pool(jobs)?.install(|| seeded_runs(config, &loaded, &config.train, &mut record, &mut fresh))?;
    record.corpus_digest = Some(loaded.corpus.digest());
    store_results(config, &mut record, &fresh)?;
    write_manifest(config, "eval", record)?;
    Ok(fresh)
}

/// Repeats [`cmd_eval`]'s runs at every sweep length and writes `sweep.csv`.
pub fn cmd_sweep_length(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let loaded = load_trained_inputs(config)?;
    let mut record = CommandRecord::new(config);
    let mut fresh = ResultsTable::new();
    thread_pool(Some(1))?.install(|| -> Result<()> {
        for n in SWEEP_LENGTHS {
            let tc = crate::training::TrainConfig {
                prompt_length: n,
                ..config.train.clone()
            };
            seeded_runs(config, &loaded, &tc, &mut record, &mut fresh)?;
        }
        Ok(())
    })?;
    let rows = length_sweep_report(&fresh, Setting::of(&config.train))?;
    record.corpus_digest = Some(loaded.corpus.digest());
    store_results(config, &mut record, &fresh)?;
    emit(config, &mut record, SWEEP_FILE, sweep_csv(&rows)?.as_bytes())?;
    write_manifest(config, "sweep-length", record)?;
    Ok(rows)
}

/// Report files from a results table: `results.csv`, `correlations.csv` and `impact.csv` text.
pub fn analyze_results(
    results: &ResultsTable,
    profiles: &[LanguageProfile],
    source: &str,
    opts: MetricOptions,
) -> Result<(CorrelationReport, [(&'static str, String); 3])> {
    let report = correlation_table(results, profiles, source, opts)?;
    let files = [
        (RESULTS_FILE, aggregate_csv(&aggregate(results)?)?),
        (CORRELATIONS_FILE, report.to_csv()?),
        (IMPACT_FILE, impact_csv(&impact_from_results(results)?)?),
    ];
    Ok((report, files))
}

/// Rebuilds every report from `runs.csv` and the language profiles.
pub fn cmd_analyze(config: &ExperimentConfig) -> Result<CorrelationReport> {
    let results = ResultsTable::load(config.out(RUNS_FILE))?;
    let profiles = load_profiles(config.profiles_path())?;
    let (report, files) = analyze_results(&results, &profiles, &config.train.source_language, config.metrics)?;
    let mut record = CommandRecord::new(config);
    for (name, text) in &files {
        emit(config, &mut record, name, text.as_bytes())?;
    }
    write_manifest(config, "analyze", record)?;
    Ok(report)
}

/// One row per profile with its six distances to `source`; `NA` where undefined.
pub fn distance_table_csv(profiles: &[LanguageProfile], source: &str, opts: MetricOptions) -> Result<String> {
    let src = profiles
        .iter()
        .find(|p| p.code == source)
        .ok_or_else(|| Error::Config(format!("source language {source} has no profile")))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["language".to_string()];
    header.extend(Metric::DISTANCES.iter().map(|m| m.name().to_string()));
    let csv_err = |e: csv::Error| Error::Schema(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for p in profiles {
        let mut row = vec![p.code.clone()];
        for m in Metric::DISTANCES {
            row.push(match distance(m, src, p, opts) {
                Ok(d) => d.to_string(),
                Err(Error::UndefinedDistance(_)) => "NA".into(),
                Err(e) => return Err(e),
            });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Schema(format!("csv: {}", e.error())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `distances.csv` for the configured profiles and source language.
pub fn cmd_distances(config: &ExperimentConfig) -> Result<String> {
    let profiles = load_profiles(config.profiles_path())?;
    let text = distance_table_csv(&profiles, &config.train.source_language, config.metrics)?;
    let mut record = CommandRecord::new(config);
    emit(config, &mut record, DISTANCES_FILE, text.as_bytes())?;
    write_manifest(config, "distances", record)?;
    Ok(text)
}
