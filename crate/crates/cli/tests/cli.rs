use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/polyglot")
}

fn fimforge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fimforge"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FIMFORGE_SCORER_URL")
        .env_remove("FIMFORGE_GENERATOR_URL")
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("JSON error line");
    serde_json::from_str(line).unwrap()
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("fimforge.toml");
    fs::write(
        &path,
        format!(
            "seed = 5\nrun_dir = \"run\"\n\n[ingest]\nrepos = [{:?}]\nrepo_id = \"polyglot\"\n\n[synth]\nbudget = 120\n\n[pairs]\nrejection_sampling = false\nsuffix_frac = 0.5\n",
            fixture().canonicalize().unwrap()
        ),
    )
    .unwrap();
    path
}

#[test]
fn pairs_without_inputs_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fimforge(&["pairs", "--run-dir", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "missing_stage_input");
    assert!(err["message"].as_str().unwrap().contains("missing stage input"));
}

#[test]
fn held_lock_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("run")).unwrap();
    fs::write(tmp.path().join("run/.lock"), "1").unwrap();
    let out = fimforge(&["report", "--run-dir", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "locked");
}

#[test]
fn bad_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    let out = fimforge(&["--config", "bad.toml", "synthesize"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn offline_run_then_noop_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path());
    let stages = "--stages=ingest,synthesize,context,pairs,curriculum,report";
    let out = fimforge(&["run", stages], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|l| l["skipped"] == false));
    let samples = fs::read(tmp.path().join("run/samples.jsonl")).unwrap();
    assert!(!tmp.path().join("run/.lock").exists());

    let again = fimforge(&["run", stages], tmp.path());
    assert!(again.status.success());
    let text = String::from_utf8_lossy(&again.stdout).to_string();
    assert!(text.lines().all(|l| l.contains("\"skipped\":true")), "{text}");
    assert_eq!(fs::read(tmp.path().join("run/samples.jsonl")).unwrap(), samples);

    let check = fimforge(&["validate-pairs", "run/pairs.jsonl"], tmp.path());
    assert!(check.status.success());
    let summary: Value = serde_json::from_slice(&check.stdout).unwrap();
    assert!(summary["pairs"].as_u64().unwrap() > 0);
    assert_eq!(summary["violations"].as_array().unwrap().len(), 0);

    let other = fimforge(&["--seed", "6", "--run-dir", "run6", "run", "--stages=ingest,synthesize"], tmp.path());
    assert!(other.status.success());
    assert_ne!(fs::read(tmp.path().join("run6/samples.jsonl")).unwrap(), samples);
}

#[test]
fn validate_pairs_flags_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let pair = serde_json::json!({
        "id": "p1",
        "source_sample_id": "s1",
        "pair_kind": "rejection",
        "prompt": { "prefix": "a = ", "suffix": "\n", "context": [], "format": "generic" },
        "chosen": "1",
        "rejected": "1",
    });
    fs::write(tmp.path().join("pairs.jsonl"), format!("{pair}\n")).unwrap();
    let out = fimforge(&["validate-pairs", "pairs.jsonl"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "invalid_input");
}
