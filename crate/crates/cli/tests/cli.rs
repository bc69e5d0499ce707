use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrc")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SPIRAL: &str = r#"{
  "task": "spiral",
  "dataset": {"n_train_per_class": 12, "n_test_per_class": 6},
  "shot_budgets": [10, 200],
  "master_seed": 11,
  "baselines": ["linear_raw", "cavity_only", "qubit_only"]
}"#;

const SMALL_NOISE: &str = r#"{
  "task": "filtered_noise",
  "protocol": {"n_fock": 40, "segment_gain": 4.0},
  "dataset": {"n_train_per_class": 3, "n_test_per_class": 2},
  "shot_budgets": [4, 16],
  "master_seed": 5
}"#;

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn run_writes_artifacts_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("spiral.json");
    fs::write(&cfg, SMALL_SPIRAL).unwrap();
    let out = tmp.path().join("out");
    let o = qrc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["curve.csv", "confusion.csv", "features.csv", "svd.csv", "baselines.csv", "model.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 16);
    assert_eq!(manifest["master_seed"], 11);
    for (name, bytes) in csvs(&out) {
        let first = String::from_utf8(bytes).unwrap().lines().next().unwrap().to_string();
        assert_eq!(first, format!("# qrc config_hash={hash} master_seed=11"), "{name}");
    }
    let model = fs::read_to_string(out.join("model.json")).unwrap();
    assert!(model.contains(&hash));
    // two classes of 18 examples, 94 moment features each
    let features = fs::read_to_string(out.join("features.csv")).unwrap();
    let rows: Vec<&str> = features.lines().skip(2).collect();
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.split(',').count() == 3 + 94));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("noise.json");
    fs::write(&cfg, SMALL_NOISE).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let o = qrc(&["--threads", "1", "run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qrc(&["--threads", "3", "run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    // and again from the first run's manifest
    let manifest = a.join("manifest.json");
    let o = qrc(&["--threads", "2", "run", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ca = csvs(&a);
    assert_eq!(ca.len(), 4);
    assert_eq!(ca, csvs(&b));
    assert_eq!(ca, csvs(&c));
    assert_eq!(fs::read(a.join("model.json")).unwrap(), fs::read(c.join("model.json")).unwrap());
}

#[test]
fn seed_flag_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("spiral.json");
    fs::write(&cfg, SMALL_SPIRAL).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(qrc(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(qrc(&["run", cfg.to_str().unwrap(), "--seed", "12", "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(fs::read(a.join("features.csv")).unwrap(), fs::read(b.join("features.csv")).unwrap());
}

#[test]
fn malformed_config_exits_1_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\n  \"task\": \"spiral\",\n  \"shot_budget\": [10]\n}").unwrap();
    let o = qrc(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("shot_budget") && e.contains("line 3"), "{e}");

    fs::write(&cfg, "{\"task\": \"spiral\", \"shot_budgets\": [100, 10]}").unwrap();
    assert_eq!(qrc(&["run", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(qrc(&["run"]).status.code(), Some(1));
}

#[test]
fn io_problems_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    assert_eq!(qrc(&["run", missing.to_str().unwrap()]).status.code(), Some(3));
    let cfg = tmp.path().join("spiral.json");
    fs::write(&cfg, SMALL_SPIRAL).unwrap();
    // the output path is an existing file
    let o = qrc(&["run", cfg.to_str().unwrap(), "--out", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn guard_failure_surfaces_with_exit_2() {
    let o = qrc(&["validate", "--n-fock", "10", "--guard-threshold", "1e-9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("guard threshold"), "{}", stderr(&o));
}

#[test]
fn validate_passes_with_defaults() {
    let o = qrc(&["validate", "--phase-shots", "4000", "--parity-shots", "40000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 4, "{text}");
    assert!(text.contains("M=4: 5"));
}

#[test]
fn simulation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("hot.json");
    let text = SMALL_NOISE.replace("\"n_fock\": 40", "\"n_fock\": 10").replace("\"segment_gain\": 4.0", "\"segment_gain\": 40.0");
    fs::write(&cfg, text).unwrap();
    let o = qrc(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn gen_data_writes_signals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("noise.json");
    fs::write(&cfg, SMALL_NOISE).unwrap();
    let out = tmp.path().join("data");
    let o = qrc(&["gen-data", cfg.to_str().unwrap(), "--shots", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (manifest, examples) = qrc_core::signals::read_dataset(&out).unwrap();
    assert_eq!(examples.len(), 30);
    // two shot windows of 8 segments at 64 samples each
    assert!(examples.iter().all(|e| e.signal.len() == 2 * 8 * 64));
    assert_eq!(manifest.signals.iter().filter(|s| s.split == "test").count(), 12);
}

#[test]
fn sweep_lesn_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("spiral.json");
    fs::write(&cfg, SMALL_SPIRAL).unwrap();
    let out = tmp.path().join("lesn");
    let o = qrc(&["sweep-lesn", cfg.to_str().unwrap(), "--sizes", "8", "--ensemble", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("lesn_summary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# qrc config_hash="));
    assert_eq!(lines[1], "r,depth,mean_acc,std_acc");
    assert!(lines[2].starts_with("8,2,"));
}
