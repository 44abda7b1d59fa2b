use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epiclose"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.json");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
  "data": {"synthetic": {"districts": 12, "seed": 3, "clusters": 3}},
  "model": {"horizon_weeks": 20},
  "budget_weeks": 3,
  "ppo": {"local_steps": 64, "minibatch": 32, "epochs": 2},
  "episodes": 8, "trials": 2, "eval_runs": 6, "ground_truth_weeks": 8
}"#;

#[test]
fn gen_data_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["gen-data", "--districts", "15", "--seed", "4", "--out", a.to_str().unwrap()]);
    ok(&["gen-data", "--districts", "15", "--seed", "4", "--out", b.to_str().unwrap()]);
    for f in ["census.csv", "mobility.csv", "contacts.txt", "districts.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let one = dir.path().join("one");
    ok(&["gen-data", "--districts", "1", "--out", one.to_str().unwrap()]);
    let mob = std::fs::read_to_string(one.join("mobility.csv")).unwrap();
    assert_eq!(mob.trim(), "origin,D000\nD000,0");
}

#[test]
fn simulate_writes_runs_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--runs", "3"]);
    let out = dir.path().join("out/simulate");
    for i in 0..3 {
        let csv = std::fs::read_to_string(out.join(format!("run_{i:03}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 20 * 7 + 2);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["seed"], 0);

    let first = std::fs::read(out.join("run_001.csv")).unwrap();
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--runs", "2"]);
    assert_eq!(std::fs::read(out.join("run_001.csv")).unwrap(), first);
}

#[test]
fn calibrate_emits_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["calibrate", "--config", cfg.to_str().unwrap(), "--r0", "1.6:2.0:0.2", "--mu", "0,0.5,...,1", "--runs", "2"]);
    let csv = std::fs::read_to_string(dir.path().join("out/calibrate/peak_days.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "r0,mu,runs,mean_peak_day,sd_peak_day,mean_attack_rate");
    assert_eq!(lines.count(), 9);
}

#[test]
fn ground_truth_improvement_is_non_negative() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["ground-truth", "--config", cfg.to_str().unwrap(), "--budget", "2", "--dump-all"]);
    let out = dir.path().join("out/ground-truth");
    let res: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(res["result"]["improvement"].as_f64().unwrap() >= 0.0);
    assert_eq!(res["result"]["evaluated"], 37);
    assert_eq!(std::fs::read_to_string(out.join("policies.csv")).unwrap().lines().count(), 38);
}

#[test]
fn train_then_evaluate_checkpoint_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let c = cfg.to_str().unwrap();
    ok(&["train", "--config", c, "--checkpoint-every", "1"]);
    let tdir = dir.path().join("out/train");
    assert!(tdir.join("trial_0/learning_curve.csv").exists());
    assert!(tdir.join("trial_1/checkpoint.ckpt").exists());
    let curve = std::fs::read_to_string(tdir.join("trial_0/learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 9);
    let best = tdir.join("best.ckpt");
    ok(&["evaluate", "--config", c, "--checkpoint", best.to_str().unwrap(), "--episode-logs", "1"]);
    let edir = dir.path().join("out/evaluate");
    let first = std::fs::read(edir.join("improvements.csv")).unwrap();
    assert!(edir.join("episode_000.csv").exists() && edir.join("episode_000.json").exists());
    let copy = dir.path().join("copy.ckpt");
    std::fs::copy(&best, &copy).unwrap();
    ok(&["evaluate", "--config", c, "--checkpoint", copy.to_str().unwrap()]);
    assert_eq!(std::fs::read(edir.join("improvements.csv")).unwrap(), first);
}

#[test]
fn evaluate_all_open_schedule_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["evaluate", "--config", cfg.to_str().unwrap(), "--schedule", "11111111", "--runs", "4"]);
    let ev: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/evaluate/evaluation.json")).unwrap())
            .unwrap();
    assert_eq!(ev["improvement"]["mean"].as_f64().unwrap(), 0.0);
}

#[test]
fn communities_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let text = ok(&["communities", "--config", cfg.to_str().unwrap(), "--community", "0"]);
    assert!(text.contains("communities"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/communities/communities.json")).unwrap())
            .unwrap();
    let total: usize = json["communities"].as_array().unwrap().iter().map(|c| c.as_array().unwrap().len()).sum();
    assert_eq!(total, 12);
    ok(&["select-districts", "--config", cfg.to_str().unwrap()]);
    let sel: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/select-districts/selection.json")).unwrap())
            .unwrap();
    assert_eq!(sel["districts"].as_array().unwrap().len(), 10);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["simulate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad_rate = write_config(dir.path(), r#"{"data": {"synthetic": {}}, "model": {"r0": -1}}"#);
    assert_eq!(run(&["simulate", "--config", bad_rate.to_str().unwrap()]).status.code(), Some(2));
    let no_file = write_config(dir.path(), r#"{"data": {"files": {"census": "missing.csv"}}}"#);
    let out = run(&["simulate", "--config", no_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let sub_one = write_config(dir.path(), r#"{"data": {"synthetic": {}}, "model": {"r0": 0.8}}"#);
    assert_ne!(run(&["simulate", "--config", sub_one.to_str().unwrap()]).status.code(), Some(0));
}
