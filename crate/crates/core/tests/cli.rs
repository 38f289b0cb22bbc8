mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::smoke_spec_path;
use spt_core::linguistics::{distance, load_profiles, Metric, MetricOptions};

fn spt(dir: &Path, args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spt"));
    cmd.args(args).arg("--out").arg(dir).env("RUST_LOG", "warn");
    match env_seed {
        Some(s) => cmd.env("SPT_SEED", s),
        None => cmd.env_remove("SPT_SEED"),
    };
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn spec_arg() -> String {
    smoke_spec_path().display().to_string()
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&read(dir.join("manifest.json"))).unwrap()
}

const FAST: [&str; 8] = [
    "--set", "pretrain.epochs=1",
    "--set", "train.epochs=2",
    "--set", "seeds=[0]",
    "--set", "targets=[\"eng\",\"deu\",\"fin\",\"fra\"]",
];

#[test]
fn gen_corpus_is_deterministic_and_honours_the_seed_variable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = spec_arg();
    for dir in [a.path(), b.path()] {
        let o = spt(dir, &["gen-corpus", "--spec", &spec], Some("5"));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["corpus.jsonl", "profiles.json"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)));
    }
    assert_eq!(manifest(a.path())["gen-corpus"]["config"]["seed"], 5);
    let o = spt(b.path(), &["gen-corpus", "--spec", &spec], Some("6"));
    assert_eq!(code(&o), 0);
    assert_ne!(read(a.path().join("corpus.jsonl")), read(b.path().join("corpus.jsonl")));
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec: serde_json::Value = serde_json::from_slice(&read(smoke_spec_path())).unwrap();
    spec["tree"]["proto"] = serde_json::json!("uralic");
    let cyclic = dir.path().join("cyclic.json");
    std::fs::write(&cyclic, spec.to_string()).unwrap();
    let o = spt(dir.path(), &["gen-corpus", "--spec", cyclic.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cycle") && stderr(&o).contains("uralic"), "{}", stderr(&o));

    let o = spt(dir.path(), &["pretrain", "--set", "corpus=\"/nonexistent/corpus.jsonl\""], None);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"train": {"shots": 8}}"#).unwrap();
    let o = spt(dir.path(), &["train", "--config", bad.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("shots"));

    let o = spt(dir.path(), &["train"], Some("not-a-number"));
    assert_eq!(code(&o), 2);
}

#[test]
fn pipeline_commands_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let spec = spec_arg();
    let run = |args: &[&str]| {
        let mut all: Vec<&str> = args.to_vec();
        all.extend(FAST);
        let o = spt(dir, &all, None);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        o
    };
    run(&["gen-corpus", "--spec", &spec]);
    run(&["pretrain"]);
    let model_before = read(dir.join("model.ckpt"));

    let out = run(&["train"]);
    assert_eq!(read(dir.join("model.ckpt")), model_before);
    let m = manifest(dir);
    assert_eq!(m["train"]["runs"][0]["trainable_parameters"], 640);
    assert_eq!(m["train"]["runs"][0]["model_crc_before"], m["train"]["runs"][0]["model_crc_after"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("640 trainable parameters"));
    assert!(read(dir.join("prompt.ckpt")).len() < 100_000);

    let o = spt(dir, &["train", "--set", "train.k=32"], None);
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    run(&["eval", "--jobs", "2"]);
    let results = String::from_utf8(read(dir.join("results.csv"))).unwrap();
    assert_eq!(results.lines().count(), 1 + 4);
    let runs_before = read(dir.join("runs.csv"));
    run(&["eval", "--jobs", "1"]);
    assert_eq!(read(dir.join("runs.csv")), runs_before, "eval is idempotent across job counts");

    run(&["sweep-length", "--set", "train.epochs=1"]);
    let sweep = String::from_utf8(read(dir.join("sweep.csv"))).unwrap();
    let lengths: Vec<&str> = sweep.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lengths, ["1", "2", "5", "10", "20", "30"]);

    run(&["analyze"]);
    let first: Vec<Vec<u8>> = ["results.csv", "correlations.csv", "impact.csv"].iter().map(|f| read(dir.join(f))).collect();
    run(&["analyze"]);
    let second: Vec<Vec<u8>> = ["results.csv", "correlations.csv", "impact.csv"].iter().map(|f| read(dir.join(f))).collect();
    assert_eq!(first, second);
    let corr = String::from_utf8(first[1].clone()).unwrap();
    assert!(corr.starts_with("setting,DATA,SYN,GEO,INV,GEN,PHON,FEA\n"));
}

#[test]
fn distance_table_matches_library_oracles() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let o = spt(dir, &["gen-corpus", "--spec", &spec_arg()], None);
    assert_eq!(code(&o), 0);
    let o = spt(dir, &["distances", "--source", "eng"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(read(dir.join("distances.csv"))).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout), text);
    let profiles = load_profiles(dir.join("profiles.json")).unwrap();
    let eng = profiles.iter().find(|p| p.code == "eng").unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "language,SYN,GEO,INV,GEN,PHON,FEA");
    assert_eq!(rows.len(), 11);
    for (row, p) in rows[1..].iter().zip(&profiles) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 7);
        assert_eq!(cells[0], p.code);
        for (cell, m) in cells[1..].iter().zip(Metric::DISTANCES) {
            let want = distance(m, eng, p, MetricOptions::default()).unwrap();
            assert_eq!(cell.parse::<f64>().unwrap(), want, "{} {m}", p.code);
        }
    }
    let o = spt(dir, &["distances", "--source", "xxx"], None);
    assert_eq!(code(&o), 2);
}
