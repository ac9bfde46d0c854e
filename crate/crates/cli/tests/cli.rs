use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn superseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_json(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

fn synth(preset: &str, dir: &Path) -> PathBuf {
    let data = dir.join(preset);
    ok(&superseg(&["synth", "--preset", preset, "--out", p(&data)]));
    data
}

fn instance_count(out_dir: &Path) -> usize {
    let text = fs::read_to_string(out_dir.join("instances.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    v["instances"].as_array().expect("instances array").len()
}

#[test]
fn synth_then_validate_is_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    for f in ["cloud.ply", "frames.json", "embeddings.json", "gt_instances.json"] {
        assert!(data.join(f).is_file(), "{f} missing");
    }
    let out = superseg(&["validate", p(&data), "--json"]);
    ok(&out);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let errors = report["issues"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|i| i["severity"] == "error")
        .count();
    assert_eq!(errors, 0, "{report}");
}

#[test]
fn validate_flags_broken_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    fs::write(data.join("frames.json"), "{ not json").unwrap();
    let out = superseg(&["validate", p(&data)]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&superseg(&["synth", "--preset", "planes2", "--out", p(&a)]));
    ok(&superseg(&["synth", "--preset", "planes2", "--out", p(&b)]));
    for f in ["cloud.ply", "frames.json", "embeddings.json", "gt_instances.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = tmp.path().join("c");
    ok(&superseg(&["synth", "--preset", "planes2", "--seed", "8", "--out", p(&c)]));
    assert_ne!(fs::read(a.join("cloud.ply")).unwrap(), fs::read(c.join("cloud.ply")).unwrap());
}

#[test]
fn segment_and_eval_boxes3() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let out1 = tmp.path().join("out1");
    let out2 = tmp.path().join("out2");
    let run = superseg(&["--threads", "2", "segment", p(&data), "--out", p(&out1), "--debug"]);
    ok(&run);
    assert!(String::from_utf8_lossy(&run.stdout).contains("instances    3"));
    assert_eq!(instance_count(&out1), 3);
    for f in ["point_map.pvim", "superpoints.json", "overlaps.jsonl", "affinity.jsonl"] {
        assert!(out1.join(f).is_file(), "{f} missing");
    }

    ok(&superseg(&["segment", p(&data), "--out", p(&out2)]));
    for f in ["instances.json", "point_map.pvim"] {
        assert_eq!(fs::read(out1.join(f)).unwrap(), fs::read(out2.join(f)).unwrap(), "{f} differs");
    }

    let report = tmp.path().join("report.json");
    let csv = tmp.path().join("classes.csv");
    ok(&superseg(&[
        "eval",
        "--pred",
        p(&out1.join("instances.json")),
        "--gt",
        p(&data.join("gt_instances.json")),
        "--table",
        p(&data.join("embeddings.json")),
        "--json",
        p(&report),
        "--csv",
        p(&csv),
    ]));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["ap"].as_f64(), Some(1.0), "{r}");
    assert_eq!(r["ap50"].as_f64(), Some(1.0), "{r}");
    assert!(fs::read_to_string(&csv).unwrap().lines().count() >= 4);

    let q = superseg(&[
        "query",
        "--instances",
        p(&out1.join("instances.json")),
        "--table",
        p(&data.join("embeddings.json")),
        "--label",
        "chair",
        "--top-k",
        "1",
    ]);
    ok(&q);
    let stdout = String::from_utf8_lossy(&q.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("chair"), "{stdout}");
}

#[test]
fn superpoint_cache_reproduces_output() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    ok(&superseg(&["segment", p(&data), "--out", p(&first), "--debug"]));
    ok(&superseg(&[
        "segment",
        p(&data),
        "--out",
        p(&second),
        "--superpoints",
        p(&first.join("superpoints.json")),
    ]));
    assert_eq!(
        fs::read(first.join("instances.json")).unwrap(),
        fs::read(second.join("instances.json")).unwrap()
    );
}

#[test]
fn vocab_file_restricts_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let vocab = tmp.path().join("vocab.txt");
    fs::write(&vocab, "# only one label\ntable\n").unwrap();
    let out = tmp.path().join("out");
    ok(&superseg(&["segment", p(&data), "--out", p(&out), "--vocab", p(&vocab)]));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("instances.json")).unwrap()).unwrap();
    let labels: Vec<&str> = v["instances"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["label"].as_str().unwrap())
        .collect();
    assert!(!labels.is_empty());
    assert!(labels.iter().all(|l| *l == "table"), "{labels:?}");

    fs::write(&vocab, "\n# nothing\n").unwrap();
    let bad = superseg(&["segment", p(&data), "--out", p(&out), "--vocab", p(&vocab)]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_json(&bad)["error"], "EmptyVocabulary");
}

#[test]
fn missing_embedding_table_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    fs::remove_file(data.join("embeddings.json")).unwrap();
    let out = superseg(&["segment", p(&data), "--out", p(&tmp.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "MissingEmbeddingTable");
}

#[test]
fn eval_rejects_label_missing_from_table() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let gt_path = data.join("gt_instances.json");
    let text = fs::read_to_string(&gt_path).unwrap().replace("\"cabinet\"", "\"wardrobe\"");
    let gt_bad = tmp.path().join("gt_bad.json");
    fs::write(&gt_bad, text).unwrap();

    let out_dir = tmp.path().join("out");
    ok(&superseg(&["segment", p(&data), "--out", p(&out_dir)]));
    let out = superseg(&[
        "eval",
        "--pred",
        p(&out_dir.join("instances.json")),
        "--gt",
        p(&gt_bad),
        "--table",
        p(&data.join("embeddings.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"], "UnknownLabel");
    assert!(err["message"].as_str().unwrap().contains("wardrobe"), "{err}");
}

#[test]
fn ablate_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let csv = tmp.path().join("sweep.csv");
    ok(&superseg(&[
        "ablate",
        p(&data),
        "--param",
        "tau_iou",
        "--values",
        "0.5,0.7,0.9",
        "--out",
        p(&csv),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,ap,ap50");
    assert_eq!(lines.len(), 4, "{text}");
    for (line, v) in lines[1..].iter().zip(["0.5", "0.7", "0.9"]) {
        assert!(line.starts_with(v), "{line}");
    }

    let empty = superseg(&["ablate", p(&data), "--param", "tau_iou", "--values", "--out", p(&csv)]);
    assert_eq!(empty.status.code(), Some(2));
    assert_eq!(error_json(&empty)["error"], "EmptyValues");

    let unknown = superseg(&["ablate", p(&data), "--param", "k_fps", "--values", "1", "--out", p(&csv)]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn bad_config_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let out = tmp.path().join("out");
    for set in ["no_such_key=1", "tau_iou=1.5", "tau_iou"] {
        let r = superseg(&["segment", p(&data), "--out", p(&out), "--set", set]);
        assert_eq!(r.status.code(), Some(2), "--set {set}");
        error_json(&r);
    }
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"tau_sim": 0.5, "typo": 1}"#).unwrap();
    let r = superseg(&["segment", p(&data), "--out", p(&out), "--config", p(&cfg)]);
    assert_eq!(r.status.code(), Some(2));

    let r = superseg(&["--threads", "0", "validate", p(&data)]);
    assert_eq!(r.status.code(), Some(2));
    let r = superseg(&["synth", "--preset", "nope", "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_json(&r)["error"], "UnknownPreset");
}

#[test]
fn hierarchical_override_matches_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth("boxes3", tmp.path());
    let flat = tmp.path().join("flat");
    let hier = tmp.path().join("hier");
    ok(&superseg(&["segment", p(&data), "--out", p(&flat)]));
    ok(&superseg(&["segment", p(&data), "--out", p(&hier), "--set", "clustering=hierarchical"]));
    assert_eq!(instance_count(&flat), instance_count(&hier));
}
