use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spectomo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectomo")).args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let o = spectomo(args, dir);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn error_kind(o: &Output) -> String {
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

/// gen, measure, fit, blueprint, localize and schedule chained through files.
fn pipeline(dir: &Path) {
    ok(&["gen", "--clients", "8", "--hts", "2", "--seed", "4", "--out", "a"], dir);
    ok(&["measure", "--topology", "a/topology.json", "--frames", "400", "--seed", "4", "--out", "a"], dir);
    ok(&["fit", "--tomography", "a/tomography.json", "--alphabet", "6", "--seed", "4", "--out", "a"], dir);
    ok(&["blueprint", "--models", "a/models.json", "--seed", "4", "--out", "a"], dir);
    ok(&["localize", "--topology", "a/topology.json", "--blueprints", "a/blueprints.json", "--out", "a"], dir);
    for policy in ["pf", "sp", "oracle"] {
        let out = format!("a/{policy}");
        ok(
            &["schedule", "--topology", "a/topology.json", "--models", "a/models.json", "--policy", policy, "--frames", "200", "--seed", "4", "--out", &out],
            dir,
        );
    }
}

#[test]
fn pipeline_commands_are_deterministic() {
    let (x, y) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(x.path());
    pipeline(y.path());
    let files = [
        "topology.json",
        "tomography.json",
        "access_vectors.csv",
        "pairwise.csv",
        "models.json",
        "blueprints.csv",
        "localization.csv",
        "pf/metrics.csv",
        "sp/metrics.csv",
        "oracle/metrics.csv",
    ];
    for f in files {
        let a = fs::read(x.path().join("a").join(f)).unwrap();
        let b = fs::read(y.path().join("a").join(f)).unwrap();
        assert!(!a.is_empty(), "{f} empty");
        assert_eq!(a, b, "{f} differs");
    }
    let header = fs::read_to_string(x.path().join("a/localization.csv")).unwrap();
    assert!(header.starts_with("topology_seed,channel,ht_index"));
}

#[test]
fn overhead_prints_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let s = ok(&["overhead", "--channels", "3", "--clients", "20", "--antennas", "4"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["first_order_sets"], 60);
    // K = 20 / 3 = 6 clusters, so 3 * C(6, 2) pairwise sets.
    assert_eq!(v["pairwise_sets"], 45);
}

#[test]
fn eval_writes_manifest_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "schema": 1,
        "kind": "ht-count",
        "seeds": [1, 2],
        "sweep": [2],
        "pipeline": { "topology": { "num_clients": 8 } }
    });
    fs::write(dir.path().join("cfg.json"), cfg.to_string()).unwrap();
    let s = ok(&["eval", "--config", "cfg.json", "--out", "run"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["status"], "complete");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert!(dir.path().join("run/summary.json").exists());
}

#[test]
fn errors_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(error_kind(&spectomo(&["gen", "--clients", "0"], d)), "invalid_parameter");
    assert_eq!(error_kind(&spectomo(&["measure", "--topology", "missing.json"], d)), "io");
    fs::write(d.join("bad.json"), "{").unwrap();
    assert_eq!(error_kind(&spectomo(&["measure", "--topology", "bad.json"], d)), "json");
    assert_eq!(error_kind(&spectomo(&["eval"], d)), "invalid_parameter");
    assert_eq!(error_kind(&spectomo(&["frobnicate"], d)), "usage");
    fs::write(d.join("old.json"), r#"{"schema": 99, "kind": "hod-mse"}"#).unwrap();
    assert_eq!(error_kind(&spectomo(&["eval", "--config", "old.json"], d)), "schema");
}
