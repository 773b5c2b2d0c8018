//! End-to-end behaviour of the `aot` binary: argument validation with named
//! fields, config files with flag precedence, exit codes, and artifact
//! shapes.

use std::path::Path;
use std::process::{Command, Output};

fn aot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aot"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    aot().args(args).arg("--out-dir").arg(dir).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn minimal_run_resolves_auto_period() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["single-link", "run", "--process", "constant:7", "--policy", "periodic:auto",
          "--alpha", "1", "--horizon", "10000", "--seed", "42"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["resolved_policy"], "periodic(lambda=4)");
    assert_eq!(manifest["metrics"]["objective"], 3.75);
    assert!(tmp.path().join("trace.csv").exists());
}

#[test]
fn negative_alpha_is_named_with_exit_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["single-link", "run", "--process", "constant:7", "--policy", "periodic:4",
          "--alpha", "-1", "--horizon", "100", "--seed", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));
}

#[test]
fn aloha_trust_slot_invariant_is_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["aloha", "analyze", "--sensors", "30", "--activity", "0.5", "--slots", "15",
          "--trust-slots", "16", "--beta", "1.5"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trust_slots"), "{}", stderr(&out));
}

#[test]
fn missing_seed_is_rejected_unless_entropy_requested() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["single-link", "run", "--process", "constant:7", "--policy", "periodic:4",
                "--alpha", "1", "--horizon", "100"];
    let out = run_in(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));

    let mut with_entropy = args.to_vec();
    with_entropy.push("--entropy-seed");
    let out = run_in(tmp.path(), &with_entropy);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entropy_seeded"], true);
    assert!(manifest["seed"].is_u64());
}

#[test]
fn mean_only_observability_conflicts_with_rate_aware_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["single-link", "run", "--process", "two-point:1,10,0.5", "--policy", "improved:auto",
          "--alpha", "1", "--horizon", "100", "--seed", "1", "--observability", "mean-only"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
kind = "single-link-run"
process = "constant:7"
policy = "periodic:auto"
alpha = 1.0
horizon = 10000
seed = 42
"#,
    )
    .unwrap();
    // flags override the file: alpha 2 resolves a different period
    let out = aot()
        .args(["single-link", "run", "--config"])
        .arg(&config)
        .args(["--alpha", "2", "--out-dir"])
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["resolved_policy"], "periodic(lambda=3)");
    assert_eq!(manifest["config"]["alpha"], 2.0);
}

#[test]
fn unknown_config_keys_are_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("exp.toml");
    std::fs::write(&config, "kind = \"single-link-run\"\nbanana = 1\n").unwrap();
    let out = aot()
        .args(["single-link", "run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("banana"), "{}", stderr(&out));
}

#[test]
fn config_kind_must_match_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("exp.toml");
    std::fs::write(&config, "kind = \"aloha-analyze\"\n").unwrap();
    let out = aot()
        .args(["single-link", "run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("single-link-run"), "{}", stderr(&out));
}

#[test]
fn qtrain_then_replay_table() {
    let tmp = tempfile::tempdir().unwrap();
    let train_dir = tmp.path().join("train");
    let out = run_in(
        &train_dir,
        &["single-link", "qtrain", "--process", "constant:7", "--alpha", "1",
          "--training-slots", "100000", "--seed", "7"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let table = train_dir.join("qtable.json");
    assert!(table.exists());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&table).unwrap()).unwrap();
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["kind"], "q-table");

    let run_dir = tmp.path().join("run");
    let policy = format!("qtable:{}", table.display());
    let out = run_in(
        &run_dir,
        &["single-link", "run", "--process", "constant:7", "--policy", &policy,
          "--alpha", "1", "--horizon", "10000", "--seed", "3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["metrics"]["objective"], 3.75);
}

#[test]
fn json_mirror_matches_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["single-link", "sweep", "--process", "constant:7", "--family", "periodic",
          "--alphas", "0.5,1,2", "--horizon", "10000", "--seed", "5", "--format", "both"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let json: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("pareto.json")).unwrap()).unwrap();
    let mut reader = csv::Reader::from_path(tmp.path().join("pareto.csv")).unwrap();
    let csv_rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(json.len(), csv_rows.len());
    for (j, c) in json.iter().zip(&csv_rows) {
        // full-precision agreement between the two mirrors
        assert_eq!(j["objective"].as_f64().unwrap(), c[4].parse::<f64>().unwrap());
    }
}

#[test]
fn unknown_figure_lists_presets() {
    let out = aot().args(["reproduce", "fig99"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fig5"), "{}", stderr(&out));
}

#[test]
fn out_dir_env_var_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let out = aot()
        .args(["aloha", "analyze", "--sensors", "10", "--activity", "0.5", "--slots", "10",
               "--trust-slots", "2", "--beta", "1.5"])
        .env("AOT_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(tmp.path().join("analytics.csv").exists());
}
