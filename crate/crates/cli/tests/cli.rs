use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn docs(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs")
        .join(file)
        .display()
        .to_string()
}

fn trc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trc"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = trc(args);
    assert!(
        out.status.success(),
        "trc {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_SIM: &str = r#"{
  "seed": 3,
  "roster": [
    {"count": 4, "kind": "free_rider"},
    {"count": 4, "kind": "conditional_cooperator"},
    {"count": 4, "kind": "triangle"},
    {"count": 4, "kind": "random"}
  ]
}"#;

fn simulated() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "sim.json", SMALL_SIM);
    ok(&["simulate", "--config", &cfg, "--out", &path(&dir, "")]);
    dir
}

#[test]
fn simulate_writes_panel_truth_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--config",
        &docs("pgg_sim.json"),
        "--out",
        &path(&dir, ""),
    ]);
    for f in ["panel.csv", "truth.csv", "tables.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let panel = std::fs::read_to_string(path(&dir, "panel.csv")).unwrap();
    assert_eq!(panel.lines().count(), 1 + 1400);
    let truth = std::fs::read_to_string(path(&dir, "truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1 + 140);
    let manifest = json(&path(&dir, "manifest.json"));
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 10);
}

#[test]
fn roster_not_divisible_by_group_size_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "sim.json",
        r#"{"roster": [{"count": 5, "kind": "free_rider"}]}"#,
    );
    let out = trc(&["simulate", "--config", &cfg, "--out", &path(&dir, "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn grid_cap_exceeded_is_resource_error() {
    let dir = simulated();
    let out = trc(&[
        "optimize",
        "--data",
        &path(&dir, "panel.csv"),
        "--rules",
        &docs("pgg_rules.json"),
        "--grid-cap",
        "1000",
        "--out",
        &path(&dir, "best.json"),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_input_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = trc(&[
        "optimize",
        "--data",
        &path(&dir, "nope.csv"),
        "--rules",
        &docs("pgg_rules.json"),
        "--out",
        &path(&dir, "b.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_measure_is_stddev() {
    let dir = simulated();
    let data = path(&dir, "panel.csv");
    let rules = docs("pgg_rules.json");
    ok(&[
        "optimize",
        "--data",
        &data,
        "--rules",
        &rules,
        "--out",
        &path(&dir, "a.json"),
    ]);
    ok(&[
        "optimize",
        "--data",
        &data,
        "--rules",
        &rules,
        "--measure",
        "stddev",
        "--out",
        &path(&dir, "b.json"),
    ]);
    let (a, b) = (json(&path(&dir, "a.json")), json(&path(&dir, "b.json")));
    assert_eq!(a, b);
    assert_eq!(a["measure"], "stddev");
    assert_eq!(a["evaluated"], 184320);
}

#[test]
fn classify_reproduces_optimizer_labels() {
    let dir = tempfile::tempdir().unwrap();
    let rules = docs("student_rules.json");
    let marks = write(
        &dir,
        "marks.csv",
        "object_id,time,mark\na,1,40\na,2,42\nb,1,61\nb,2,60\nc,1,90\nc,2,88\n",
    );
    ok(&[
        "optimize",
        "--data",
        &marks,
        "--rules",
        &rules,
        "--out",
        &path(&dir, "best.json"),
    ]);
    ok(&[
        "classify",
        "--data",
        &marks,
        "--rules",
        &rules,
        "--bindings",
        &path(&dir, "best.json"),
        "--out",
        &path(&dir, "l.csv"),
    ]);
    let labels = std::fs::read_to_string(path(&dir, "l.csv")).unwrap();
    assert_eq!(labels, "object_id,class\na,Bad\nb,Good\nc,Excellent\n");
    let flat = write(&dir, "flat.json", r#"{"p_hi": 95, "p_lo": 50}"#);
    ok(&[
        "classify",
        "--data",
        &marks,
        "--rules",
        &rules,
        "--bindings",
        &flat,
        "--out",
        &path(&dir, "f.csv"),
    ]);
    let labels = std::fs::read_to_string(path(&dir, "f.csv")).unwrap();
    assert_eq!(labels, "object_id,class\na,Bad\nb,Good\nc,Good\n");
}

#[test]
fn evaluate_rejects_mismatched_objects() {
    let dir = simulated();
    let other = write(&dir, "other.csv", "object_id,class\nzz1,A\nzz2,B\n");
    let out = trc(&[
        "evaluate",
        "--data",
        &path(&dir, "panel.csv"),
        "--labels-a",
        &path(&dir, "truth.csv"),
        "--labels-b",
        &other,
        "--out",
        &path(&dir, "e.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_labelings_agree_on_the_diagonal() {
    let dir = simulated();
    let truth = path(&dir, "truth.csv");
    ok(&[
        "evaluate",
        "--data",
        &path(&dir, "panel.csv"),
        "--labels-a",
        &truth,
        "--labels-b",
        &truth,
        "--repeats",
        "2",
        "--out",
        &path(&dir, "e.json"),
    ]);
    let e = json(&path(&dir, "e.json"));
    let cells = e["agreement"]["cells"].as_array().unwrap();
    for (i, row) in cells.iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            let want = if i == j { 100.0 } else { 0.0 };
            assert_eq!(v.as_f64().unwrap(), want, "cell ({i}, {j})");
        }
    }
    assert_eq!(e["matched"]["agreement"], 1.0);
    assert!(dir.path().join("e.txt").exists());
}

#[test]
fn report_has_four_feature_sets_by_two_labelings() {
    let dir = simulated();
    let data = path(&dir, "panel.csv");
    let rules = docs("pgg_rules.json");
    ok(&[
        "optimize",
        "--data",
        &data,
        "--rules",
        &rules,
        "--out",
        &path(&dir, "best.json"),
    ]);
    ok(&[
        "classify",
        "--data",
        &data,
        "--rules",
        &rules,
        "--bindings",
        &path(&dir, "best.json"),
        "--out",
        &path(&dir, "labels.csv"),
    ]);
    ok(&[
        "evaluate",
        "--data",
        &data,
        "--labels-a",
        &path(&dir, "truth.csv"),
        "--labels-b",
        &path(&dir, "labels.csv"),
        "--tables",
        &path(&dir, "tables.csv"),
        "--repeats",
        "3",
        "--out",
        &path(&dir, "eval.json"),
    ]);
    let e = json(&path(&dir, "eval.json"));
    let mean = e["auc"]["mean_auc"].as_array().unwrap();
    assert_eq!(mean.len(), 4);
    assert!(mean.iter().all(|r| r.as_array().unwrap().len() == 2));
    assert!(dir.path().join("eval.derived.csv").exists());

    let report = path(&dir, "report.txt");
    ok(&["report", "--in", &path(&dir, ""), "--out", &report]);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("fr_contrib"));
    let plot = std::fs::read_to_string(path(&dir, "report.truth.contribution.csv")).unwrap();
    assert_eq!(
        plot.lines().next(),
        Some("class,time,n,mean,min,q1,median,q3,max")
    );
    assert_eq!(plot.lines().count(), 1 + 4 * 10);
}
