//! JSONL and TSV corpus files.
//!
//! Both formats carry the same four fields per record: `text`, `label`,
//! `language`, `split`. TSV files start with that header row.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{label_index, Corpus, Example, Split};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    text: String,
    label: String,
    language: String,
    split: String,
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Collects per-line problems so a single load reports all of them.
struct Ingest {
    corpus: Corpus,
    problems: Vec<String>,
}

impl Ingest {
    fn new() -> Self {
        Self {
            corpus: Corpus::new(),
            problems: Vec::new(),
        }
    }

    fn add(&mut self, line: usize, r: Record) {
        if label_index(&r.label).is_none() {
            self.problems
                .push(format!("line {line}: unknown label {:?}", r.label));
            return;
        }
        if r.language.trim().is_empty() {
            self.problems.push(format!("line {line}: empty language"));
            return;
        }
        let split: Split = match r.split.parse() {
            Ok(s) => s,
            Err(msg) => {
                self.problems.push(format!("line {line}: {msg}"));
                return;
            }
        };
        self.corpus.push(
            split,
            Example {
                text: r.text,
                label: r.label,
                language: r.language,
            },
        );
    }

    fn finish(self, path: &Path) -> Result<Corpus> {
        if !self.problems.is_empty() {
            return Err(Error::Schema(format!(
                "{}: {}",
                path.display(),
                self.problems.join("; ")
            )));
        }
        for w in self.corpus.split_size_warnings() {
            log::warn!("{w}");
        }
        Ok(self.corpus)
    }
}

pub fn parse_jsonl(source: &str, path: &Path) -> Result<Corpus> {
    let mut ingest = Ingest::new();
    for (i, line) in source.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Record>(line) {
            Ok(r) => ingest.add(i + 1, r),
            Err(e) => ingest.problems.push(format!("line {}: {e}", i + 1)),
        }
    }
    ingest.finish(path)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    parse_jsonl(&read_to_string(path)?, path)
}

pub fn parse_tsv(source: &str, path: &Path) -> Result<Corpus> {
    let mut lines = source.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.split('\t').collect(),
        None => return Err(Error::Schema(format!("{}: empty TSV file", path.display()))),
    };
    let column = |name: &str| {
        header
            .iter()
            .position(|&h| h == name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column {name:?}", path.display())))
    };
    let cols = [column("text")?, column("label")?, column("language")?, column("split")?];

    let mut ingest = Ingest::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            ingest.problems.push(format!(
                "line {}: expected {} fields, found {}",
                i + 1,
                header.len(),
                fields.len()
            ));
            continue;
        }
        let r = Record {
            text: fields[cols[0]].to_string(),
            label: fields[cols[1]].to_string(),
            language: fields[cols[2]].to_string(),
            split: fields[cols[3]].to_string(),
        };
        ingest.add(i + 1, r);
    }
    ingest.finish(path)
}

pub fn load_tsv(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    parse_tsv(&read_to_string(path)?, path)
}

pub fn to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (split, e) in corpus.iter() {
        let r = Record {
            text: e.text.clone(),
            label: e.label.clone(),
            language: e.language.clone(),
            split: split.to_string(),
        };
        out.push_str(&serde_json::to_string(&r).expect("plain strings serialize"));
        out.push('\n');
    }
    out
}

pub fn to_tsv(corpus: &Corpus) -> Result<String> {
    let mut out = String::from("text\tlabel\tlanguage\tsplit\n");
    for (split, e) in corpus.iter() {
        if e.text.contains(['\t', '\n', '\r']) {
            return Err(Error::Schema(format!(
                "text in language {} contains a tab or newline and cannot be written as TSV",
                e.language
            )));
        }
        let _ = writeln!(out, "{}\t{}\t{}\t{}", e.text, e.label, e.language, split);
    }
    Ok(out)
}

pub fn save_jsonl(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    crate::model::checkpoint::write_file(path, to_jsonl(corpus).as_bytes())
}

pub fn save_tsv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    crate::model::checkpoint::write_file(path, to_tsv(corpus)?.as_bytes())
}
