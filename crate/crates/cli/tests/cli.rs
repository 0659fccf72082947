use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 8] = ["--word-dim", "4", "--position-dim", "2", "--hidden", "3", "--attention-dim", "4"];

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emocause"))
        .args(args)
        .current_dir(dir)
        .env_remove("EMOCAUSE_SEED")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn trained(dir: &Path) {
    ok(dir, &["generate", "--docs", "60", "--seed", "2", "--out", "c.jsonl"]);
    let mut args = vec!["train", "--corpus", "c.jsonl", "--out", "m.ckpt", "--epochs", "1"];
    args.extend(SMALL);
    ok(dir, &args);
}

#[test]
fn generate_writes_corpus_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["generate", "--docs", "25", "--seed", "4", "--out", "c.jsonl"]);
    let corpus = fs::read_to_string(tmp.path().join("c.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 25);
    let manifest = fs::read_to_string(tmp.path().join("c.jsonl.manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"generate\""));
    assert!(manifest.contains("seed = 4"));
}

#[test]
fn seed_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["generate", "--docs", "10", "--seed", "9", "--out", "a.jsonl"]);
    let out = Command::new(env!("CARGO_BIN_EXE_emocause"))
        .args(["generate", "--docs", "10", "--out", "b.jsonl"])
        .current_dir(dir)
        .env("EMOCAUSE_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(dir.join("a.jsonl")).unwrap(), fs::read(dir.join("b.jsonl")).unwrap());
}

#[test]
fn invalid_arguments_exit_with_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["generate", "--docs", "0", "--out", "c.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["ablate", "--corpus", "c.jsonl", "--variants", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("pae-dgl"), "{}", stderr(&out));
}

#[test]
fn missing_corpus_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["train", "--corpus", "nope.jsonl", "--out", "m.ckpt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.jsonl"), "{}", stderr(&out));
}

#[test]
fn train_then_eval_in_both_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    trained(dir);
    assert_eq!(fs::read_to_string(dir.join("m.ckpt.loss.jsonl")).unwrap().lines().count(), 1);
    let predicted = ok(dir, &["eval", "--checkpoint", "m.ckpt", "--corpus", "c.jsonl"]);
    assert!(predicted.contains("mode       predicted"), "{predicted}");
    let oracle = ok(dir, &["eval", "--checkpoint", "m.ckpt", "--corpus", "c.jsonl", "--oracle-dgl", "--out", "e.json"]);
    assert!(oracle.contains("mode       oracle"), "{oracle}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("e.json")).unwrap()).unwrap();
    assert_eq!(json["mode"], "oracle");
    assert_eq!(json["documents"], 60);
}

#[test]
fn eval_rejects_a_foreign_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    trained(dir);
    fs::write(
        dir.join("other.jsonl"),
        r#"{"doc_id":"x","clauses":[["alpha","beta"],["gamma"]],"emotion_index":1,"gold_causes":[1,0]}"#,
    )
    .unwrap();
    let out = run(dir, &["eval", "--checkpoint", "m.ckpt", "--corpus", "other.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown to the checkpoint vocabulary"), "{}", stderr(&out));
}

#[test]
fn manifest_of_another_command_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["generate", "--docs", "5", "--out", "c.jsonl"]);
    let out = run(dir, &["train", "--config", "c.jsonl.manifest.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("manifest of `generate`"), "{}", stderr(&out));
}

#[test]
fn upper_bound_is_not_a_training_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["generate", "--docs", "5", "--out", "c.jsonl"]);
    let out = run(dir, &["train", "--corpus", "c.jsonl", "--out", "m.ckpt", "--variant", "dgl-upper-bound"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ablate_writes_rows_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["generate", "--docs", "60", "--seed", "3", "--out", "c.jsonl"]);
    let mut args = vec![
        "ablate", "--corpus", "c.jsonl", "--out", "r.jsonl", "--variants", "pae,pae-dgl", "--reps", "2", "--epochs", "1",
        "--no-timing",
    ];
    args.extend(SMALL);
    let table = ok(dir, &args);
    assert!(table.contains("PAE-DGL"), "{table}");
    let rows = fs::read_to_string(dir.join("r.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    assert!(rows.contains("\"wall_clock_seconds\":0.0"));
    assert_eq!(fs::read_to_string(dir.join("r.txt")).unwrap(), table);
}

#[test]
fn gradcheck_exit_code_tracks_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let passing = run(dir, &["gradcheck", "--seed", "1"]);
    assert!(passing.status.success());
    assert!(stderr(&passing).contains("all 15 tensors"), "{}", stderr(&passing));
    let out = run(dir, &["gradcheck", "--seed", "1", "--tolerance", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gradient mismatch"), "{}", stderr(&out));
}
