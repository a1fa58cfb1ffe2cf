use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tergmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tergmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = tergmix(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn simulated(dir: &Path, preset: &str, seed: &str) -> PathBuf {
    let out = dir.join(format!("{preset}-{seed}"));
    ok(&["simulate", "--preset", preset, "--seed", seed, "--out", out.to_str().unwrap()]);
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_series_labels_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    ok(&["simulate", "--model", "tergm", "--preset", "model1", "--seed", "7", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("series.tsv")).unwrap();
    assert!(text.starts_with("# nodes=100 horizon=10\n"));
    assert_eq!(fs::read_to_string(out.join("labels.tsv")).unwrap().lines().count(), 101);
    let manifest = json(out.join("manifest.json"));
    let files: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    assert_eq!(files, ["series.tsv", "labels.tsv", "truth.json", "provenance.json"]);
    let provenance = json(out.join("provenance.json"));
    assert_eq!(provenance["config"]["simulation"]["seed"], 7);
    assert_eq!(provenance["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn stergm_preset_emits_formation_and_persistence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulated(tmp.path(), "model3", "1");
    let truth = json(out.join("truth.json"));
    assert_eq!(truth["model"], "stergm_fp");
    assert_eq!(truth["theta"], serde_json::json!([[-1.5, -1.0], [1.5, 1.0]]));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let res = tergmix(&["simulate", "--preset", "model1", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--seed"));
    assert!(!out.exists());
}

#[test]
fn mismatched_preset_model_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let res = tergmix(&["simulate", "--preset", "model3", "--model", "tergm", "--seed", "1", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn failed_write_removes_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model1", "2");
    let out = tmp.path().join("fit");
    fs::create_dir_all(out.join("labels.tsv")).unwrap();
    let res = tergmix(&[
        "fit", "--in", s(&sim.join("series.tsv")), "--model", "tergm", "--k", "2", "--seed", "1",
        "--restarts", "2", "--out", s(&out),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.join("fit.json").exists());
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn single_community_fit_converges_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model1", "3");
    let out = tmp.path().join("fit");
    ok(&["fit", "--in", s(&sim.join("series.tsv")), "--model", "tergm", "--k", "1", "--seed", "0", "--out", s(&out)]);
    let doc = json(out.join("fit.json"));
    assert_eq!(doc["converged"], true);
    assert!(doc["iterations"].as_u64().unwrap() <= 3);
}

#[test]
fn identical_seeds_give_identical_fit_documents() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model1", "4");
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "fit", "--in", s(&sim.join("series.tsv")), "--model", "tergm", "--k", "2", "--seed", "9",
            "--restarts", "3", "--out", s(&out),
        ]);
        fs::read(out.join("fit.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn stergm_fit_recovers_model3_communities() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model3", "5");
    let fit = tmp.path().join("fit");
    ok(&["fit", "--in", s(&sim.join("series.tsv")), "--model", "stergm", "--k", "2", "--seed", "1", "--out", s(&fit)]);
    let met = tmp.path().join("metrics");
    ok(&[
        "metrics", "--truth", s(&sim.join("labels.tsv")), "--fit", s(&fit.join("fit.json")),
        "--truth-params", s(&sim.join("truth.json")), "--out", s(&met),
    ]);
    let m = json(met.join("metrics.json"));
    assert!(m["rand_index"].as_f64().unwrap() >= 0.99);
    assert!(m["rse"]["rse_theta"][0].as_f64().unwrap() < 0.2);
}

#[test]
fn select_reports_every_k_and_picks_two_on_model1() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model1", "6");
    let out = tmp.path().join("sel");
    ok(&[
        "select", "--in", s(&sim.join("series.tsv")), "--model", "tergm", "--k-min", "1", "--k-max", "4",
        "--seed", "1", "--restarts", "4", "--out", s(&out),
    ]);
    let tsv = fs::read_to_string(out.join("selection.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 4);
    let report = json(out.join("selection.json"));
    assert_eq!(report["chosen_k_clbic"], 2);
    assert_eq!(report["chosen_k_icl"], 2);
    assert!(out.join("fit_k3.json").exists());
}

#[test]
fn select_over_a_single_k() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model1", "7");
    let out = tmp.path().join("sel");
    ok(&[
        "select", "--in", s(&sim.join("series.tsv")), "--model", "tergm", "--k-min", "1", "--k-max", "1",
        "--seed", "1", "--out", s(&out),
    ]);
    let report = json(out.join("selection.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
    assert_eq!(report["chosen_k_clbic"], 1);
}

#[test]
fn truth_against_itself_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model2", "8");
    let labels = sim.join("labels.tsv");
    let out = tmp.path().join("m");
    ok(&["metrics", "--truth", s(&labels), "--labels", s(&labels), "--out", s(&out)]);
    assert_eq!(json(out.join("metrics.json"))["rand_index"], 1.0);
}

#[test]
fn instability_writes_one_row_per_community_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulated(tmp.path(), "model4", "9");
    let out = tmp.path().join("inst");
    ok(&["instability", "--in", s(&sim.join("series.tsv")), "--labels", s(&sim.join("labels.tsv")), "--out", s(&out)]);
    let tsv = fs::read_to_string(out.join("instability.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 6);
}

#[test]
fn config_document_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let config = tmp.path().join("run.json");
    let doc = serde_json::json!({
        "seed": 3,
        "out": out,
        "simulation": {
            "generator": "duration_density",
            "n": 30,
            "horizon": 4,
            "pi": [0.5, 0.5],
            "mean_duration": [4.0, 2.0],
            "avg_density": [0.2, 0.3],
            "cross_edges": 2,
            "seed": 0
        }
    });
    fs::write(&config, doc.to_string()).unwrap();
    ok(&["simulate", "--config", s(&config), "--seed", "11"]);
    assert!(fs::read_to_string(out.join("series.tsv")).unwrap().starts_with("# nodes=30 horizon=4\n"));
    let provenance = json(out.join("provenance.json"));
    assert_eq!(provenance["config"]["simulation"]["seed"], 11);
    assert!(!out.join("truth.json").exists());
}
