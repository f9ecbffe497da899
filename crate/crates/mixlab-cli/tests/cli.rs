//! End-to-end checks of the binary: build outputs, profile CSVs,
//! deterministic reruns, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn mixlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlab"))
        .args(args)
        .output()
        .expect("binary must run")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mixlab-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn build_example33_has_41_states() {
    let dir = tempdir("build33");
    let out = mixlab(&[
        "build",
        "--family",
        "example33",
        "--n",
        "20",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let net = mixlab::network::WeightedNetwork::load(&dir.join("example33.network.json")).unwrap();
    assert_eq!(net.n_vertices(), 41);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("example33.metadata.json")).unwrap())
            .unwrap();
    assert!(meta["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn build_theorem2a_emits_d_labels() {
    let dir = tempdir("build2a");
    let out = mixlab(&[
        "build",
        "--family",
        "theorem2a",
        "--depth",
        "6",
        "--torus-side",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let net =
        mixlab::network::WeightedNetwork::load(&dir.join("theorem2a.network.json")).unwrap();
    let labeled = (0..net.n_vertices()).any(|v| net.has_label(v, "D"));
    assert!(labeled, "D labels must be present");
}

#[test]
fn build_theorem3_micro_instance() {
    let dir = tempdir("build3");
    let out = mixlab(&[
        "build",
        "--family",
        "theorem3",
        "--s",
        "2",
        "--m",
        "2",
        "--b",
        "2",
        "--blocks",
        "2",
        "--n",
        "768",
        "--gap-threshold",
        "0.02",
        "--seed",
        "9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("theorem3.metadata.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["theta"], serde_json::json!(0));
    assert!(meta["expander_certificate"]["gap"].as_f64().unwrap() >= 0.02);
    assert!(meta["perturbation_selector"].as_str().unwrap().contains("pleft"));
    assert!(meta["base_girth_found"].as_u64().unwrap() >= 3);
}

#[test]
fn build_invalid_theorem1_delta_names_constraint() {
    let out = mixlab(&[
        "build", "--family", "theorem1", "--n", "16", "--delta", "0.0", "--s", "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta"), "stderr must name the violated constraint: {err}");
}

#[test]
fn profile_two_state_lazy_tv() {
    let dir = tempdir("profile2");
    let net_path = dir.join("two.json");
    std::fs::write(
        &net_path,
        r#"{"vertices":[{"id":"u","labels":[]},{"id":"v","labels":[]}],
            "edges":[{"u":"u","v":"v","w":1.0}]}"#,
    )
    .unwrap();
    let csv_path = dir.join("profile.csv");
    let out = mixlab(&[
        "profile",
        "--network",
        net_path.to_str().unwrap(),
        "--kind",
        "tv",
        "--holding",
        "0.5",
        "--t-max",
        "5",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let values: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(values.len(), 6);
    assert_eq!(values[0], "0,0.5");
    for row in &values[1..] {
        assert!(row.ends_with(",0"), "row {row}");
    }
    assert!(text.lines().last().unwrap().starts_with("# config="));

    // Rerun reproduces identical bytes.
    let csv2 = dir.join("profile2.csv");
    let out = mixlab(&[
        "profile",
        "--network",
        net_path.to_str().unwrap(),
        "--kind",
        "tv",
        "--holding",
        "0.5",
        "--t-max",
        "5",
        "--out",
        csv2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&csv_path).unwrap(), std::fs::read(&csv2).unwrap());
}

#[test]
fn profile_separation_starts_at_one() {
    let dir = tempdir("profsep");
    let net_path = dir.join("tri.json");
    std::fs::write(
        &net_path,
        r#"{"vertices":[{"id":"a"},{"id":"b"},{"id":"c"}],
            "edges":[{"u":"a","v":"b","w":1.0},{"u":"b","v":"c","w":1.0},{"u":"c","v":"a","w":1.0}]}"#,
    )
    .unwrap();
    let out = mixlab(&[
        "profile",
        "--network",
        net_path.to_str().unwrap(),
        "--kind",
        "separation",
        "--t-max",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().nth(1).unwrap().starts_with("0,1"));
}

#[test]
fn monte_carlo_experiment_reruns_byte_identical() {
    let dir_a = tempdir("det-a");
    let dir_b = tempdir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = mixlab(&[
            "experiment",
            "fact41",
            "--config",
            write_config(dir, r#"{"samples": 4000}"#).to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(dir_a.join("fact41.report.json")).unwrap();
    let b = std::fs::read(dir_b.join("fact41.report.json")).unwrap();
    assert_eq!(a, b);
}

fn write_config(dir: &PathBuf, contents: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn experiment_unknown_name_is_usage_error() {
    let out = mixlab(&["experiment", "does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("lemma32"), "usage error lists registered names");
}

#[test]
fn experiment_writes_report_and_artifacts() {
    let dir = tempdir("exp");
    let out = mixlab(&[
        "experiment",
        "local-clt",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("local-clt.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert!(report["config_hash"].as_str().unwrap().len() == 16);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS local-clt"));
}
