use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use compgen::coverage::oracle::brute_force_cutoffs;
use compgen::coverage::Evaluator;
use compgen::dataset::{read_jsonl, Example};
use compgen::task::{CompositionStructure, PrimitiveTable};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_compgen");

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/x4")
}

fn compgen(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("COMPGEN_OUT_DIR", out_dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn examples(path: &Path) -> Vec<Example> {
    read_jsonl(&fs::read(path).unwrap()[..]).unwrap()
}

#[test]
fn gen_writes_splits_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = compgen(dir.path(), &["gen", "--vocab", "8", "--n", "100", "--test-size", "30", "--seed", "5", "--text", "plain"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = dir.path();
    assert_eq!(examples(&d.join("train.jsonl")).len(), 100);
    assert_eq!(examples(&d.join("id_test.jsonl")).len(), 30);
    assert_eq!(examples(&d.join("ood_test.jsonl")).len(), 30);
    let txt = fs::read_to_string(d.join("train.txt")).unwrap();
    assert!(txt.lines().all(|l| l.starts_with("<t_") && l.ends_with("</a>")));
    let m = json(&d.join("manifest.json"));
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seeds"], serde_json::json!([5]));
    assert_eq!(m["config"]["vocab"], 8);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 7);
    for rec in outputs {
        assert_eq!(rec["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn gen_capacity_error_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = compgen(dir.path(), &["gen", "--vocab", "3", "--n", "1000", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["gen", "--vocab", "abc"],
        vec!["gen", "--task", "zigzag"],
        vec!["cover"],
        vec!["cover", "--data", "nowhere", "--k-max", "0"],
        vec!["iicg", "--vectors", "v.jsonl", "--weighting", "mean"],
        vec!["ie", "--clean", "0.1"],
        vec!["--workers", "0", "mrr", "--in", "x"],
    ] {
        let o = compgen(dir.path(), &args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn help_exits_zero_and_lists_exit_codes() {
    let o = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for needle in ["Exit codes", "capacity", "replay"] {
        assert!(text.contains(needle));
    }
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = compgen(dir.path(), &["mrr", "--in", dir.path().join("absent.jsonl").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"scores\":[1.0],\"target\":4}\n").unwrap();
    let o = compgen(dir.path(), &["mrr", "--in", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!dir.path().join("mrr.json").exists());
}

#[test]
fn cover_on_fixture_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let o = compgen(dir.path(), &["cover", "--data", fixture().to_str().unwrap(), "--k-max", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    #[derive(serde::Deserialize)]
    struct Prims {
        structure: CompositionStructure,
        primitives: Vec<PrimitiveTable>,
    }
    let prims: Prims = serde_json::from_slice(&fs::read(fixture().join("primitives.json")).unwrap()).unwrap();
    let truth = Evaluator { structure: &prims.structure, primitives: &prims.primitives };
    let train = examples(&fixture().join("train.jsonl"));
    let mut test = examples(&fixture().join("id_test.jsonl"));
    test.extend(examples(&fixture().join("ood_test.jsonl")));
    let vertices: Vec<_> = test.iter().map(|e| e.input.clone()).collect();
    let want = brute_force_cutoffs(&train, &vertices, 4, &truth).unwrap();

    let mut rdr = csv::Reader::from_path(dir.path().join("coverage.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["example_id", "split", "input", "k_cutoff", "covered_k1", "covered_k2", "covered_k3", "covered_k4"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), test.len());
    for (row, (e, k)) in rows.iter().zip(test.iter().zip(&want)) {
        let input: Vec<String> = e.input.iter().map(|t| t.0.to_string()).collect();
        assert_eq!(&row[2], input.join(" "));
        assert_eq!(row[3].parse::<usize>().unwrap(), *k, "{input:?}");
        for j in 1..=4 {
            assert_eq!(&row[3 + j], if j <= *k { "1" } else { "0" });
        }
    }
    let summary = json(&dir.path().join("coverage.summary.json"));
    // thresholds above the largest possible evidence count are skipped
    assert!((1..=4).contains(&summary["k_evaluated"].as_u64().unwrap()));
    assert_eq!(summary["train_vertices"], 16);
}

#[test]
fn cutoff_alias_and_label_mode_agree_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&compgen(dir.path(), &["cover", "--data", data.to_str().unwrap(), "--out", a.to_str().unwrap()])), 0);
    let o = compgen(dir.path(), &["cutoff", "--data", data.to_str().unwrap(), "--labels-only", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    // the fixture's test splits carry true labels, so label filtering loses nothing here
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"vocab": 6, "n": 40, "test_size": 5, "seed": 9}"#).unwrap();
    let out = dir.path().join("g");
    let o = compgen(dir.path(), &["gen", "--config", cfg.to_str().unwrap(), "--n", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["vocab"], 6);
    assert_eq!(m["config"]["n"], 20);
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(examples(&out.join("train.jsonl")).len(), 20);

    fs::write(&cfg, r#"{"vocab": 6, "colour": "red"}"#).unwrap();
    let o = compgen(dir.path(), &["gen", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("h").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("h").exists());
}

#[test]
fn scaling_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = compgen(dir.path(), &["scaling", "--k", "1,2", "--vocab", "6,8,10", "--trials", "20", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("scaling.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let (n, lo, hi): (f64, f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(lo <= n && n <= hi, "{r:?}");
    }
    let o = compgen(dir.path(), &["fit", "--in", dir.path().join("scaling.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let fit = json(&dir.path().join("scaling.fit.json"));
    let fits = fit["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for f in fits {
        assert!(f["exponent"].as_f64().unwrap() > 1.0);
        assert_eq!(f["points"], 3);
    }
    let o = compgen(dir.path(), &["scaling", "--vocab", "64", "--trials", "5", "--ceiling", "10", "--out", "never.csv"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn metric_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let vectors = d.join("v.jsonl");
    fs::write(
        &vectors,
        "{\"dim\":2,\"count\":4,\"labels\":[\"a\",\"a\",\"b\",\"b\"],\"tags\":{\"layer\":\"3\"}}\n[1,0]\n[2,0]\n[0,3]\n[0,1]\n",
    )
    .unwrap();
    assert_eq!(code(&compgen(d, &["iicg", "--vectors", vectors.to_str().unwrap()])), 0);
    let text = fs::read_to_string(d.join("iicg.csv")).unwrap();
    assert_eq!(text, "tag,group_key,iicg\nlayer=3,label,1\n");

    assert_eq!(code(&compgen(d, &["ie", "--clean", "0.2", "--corrupt", "0.7", "--patched", "0.7"])), 0);
    assert_eq!(fs::read_to_string(d.join("ie.csv")).unwrap(), "p_clean,p_corrupt,p_patched,ie\n0.2,0.7,0.7,1\n");
    let traces = d.join("t.csv");
    fs::write(&traces, "p_clean,p_corrupt,p_patched\n0.1,0.9,0.5\n0.4,0.4,0.5\n").unwrap();
    assert_eq!(code(&compgen(d, &["ie", "--in", traces.to_str().unwrap(), "--out", "x.csv"])), 3);
    assert_eq!(code(&compgen(d, &["ie", "--in", traces.to_str().unwrap(), "--clean", "0.1"])), 2);

    let scores = d.join("s.jsonl");
    fs::write(&scores, "{\"scores\":[0.1,0.9,0.3],\"target\":1}\n{\"scores\":[0.5,0.9,0.3],\"target\":0}\n").unwrap();
    assert_eq!(code(&compgen(d, &["mrr", "--in", scores.to_str().unwrap()])), 0);
    let m = json(&d.join("mrr.json"));
    assert_eq!(m["mrr"], 0.75);
    assert_eq!(m["rows"], 2);
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = compgen(dir.path(), &["selfcheck", "--instances", "25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("selfcheck.json"));
    assert_eq!(r["random"]["cutoff_mismatches"], 0);
    assert_eq!(r["fixture"]["cutoff_mismatches"], 0);
}

#[test]
fn replay_detects_changed_inputs_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scores = d.join("s.jsonl");
    fs::write(&scores, "{\"scores\":[0.1,0.9],\"target\":1}\n").unwrap();
    assert_eq!(code(&compgen(d, &["mrr", "--in", scores.to_str().unwrap()])), 0);
    let manifest = d.join("mrr.manifest.json");
    let m = manifest.to_str().unwrap();
    assert_eq!(code(&compgen(d, &["replay", "--manifest", m, "--verify-only"])), 0);

    fs::write(d.join("mrr.json"), "tampered").unwrap();
    // replay recomputes from inputs, so a tampered output is simply rewritten
    assert_eq!(code(&compgen(d, &["replay", "--manifest", m])), 0);
    assert_ne!(fs::read_to_string(d.join("mrr.json")).unwrap(), "tampered");

    let mut doc = json(&manifest);
    doc["outputs"][0]["sha256"] = Value::String("0".repeat(64));
    fs::write(&manifest, serde_json::to_vec(&doc).unwrap()).unwrap();
    assert_eq!(code(&compgen(d, &["replay", "--manifest", m, "--verify-only"])), 5);

    fs::write(&scores, "{\"scores\":[0.9,0.1],\"target\":1}\n").unwrap();
    assert_eq!(code(&compgen(d, &["replay", "--manifest", m])), 3);
}
