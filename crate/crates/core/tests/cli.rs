use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shapelab"));
    c.env_remove("SHAPELAB_KERNEL_CACHE");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    let o = bin().args(args).arg("--out").arg(out).output().unwrap();
    eprintln!("{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

#[test]
fn eval_unit_disk_torsion_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", data("ball_unit.dom").to_str().unwrap(), "--eps", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rec = json(&dir.path().join("eval.json"));
    let e = rec["payload"]["energy"].as_f64().unwrap();
    let want = -1.0 / (16.0 * std::f64::consts::PI);
    assert!((e / want - 1.0).abs() < 0.02, "{e}");
    assert_eq!(rec["provenance"]["cells_per_axis"], 128);
    assert!(rec["provenance"]["kernel_table"].as_str().unwrap().starts_with("riesz-v1-N2"));
}

#[test]
fn eval_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dom");
    std::fs::write(&bad, r#"{"format":"shapelab-domain","version":1,"dim":2}"#).unwrap();
    let o = run(&["eval", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains('`'));

    let o = run(&["eval", data("ball_unit.dom").to_str().unwrap(), "--eps", "-0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));

    let o = run(&["eval", "/nonexistent.dom"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_corpus_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", data("corpus").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rec = json(&dir.path().join("verify.json"));
    assert_eq!(rec["payload"]["rows"].as_array().unwrap().len(), 80);
    for (_, q) in rec["payload"]["min_ratio"].as_object().unwrap() {
        assert!(q.as_f64().unwrap() > 0.0);
    }
}

#[test]
fn verify_checks_subset_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    copy_dir(&data("corpus"), &corpus);

    let o = run(&["verify", corpus.to_str().unwrap(), "--checks", "kj"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&dir.path().join("verify.json"))["payload"]["rows"].clone();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r["check"] == "kohler_jobin"));

    let path = corpus.join("manifest.json");
    let mut m = json(&path);
    let e = m["entries"][3]["recorded"]["energy"].as_f64().unwrap();
    m["entries"][3]["recorded"]["energy"] = Value::from(e * 1.5);
    std::fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    let o = run(&["verify", corpus.to_str().unwrap(), "--checks", "sv,kj"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("star-03,") && l.contains("false")));

    let o = run(&["verify", dir.path().join("missing").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_corpus_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["gen-corpus", "--count", "3", "--grid", "48", "--seed", "9"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["manifest.json", "star-00.json", "star-02.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn empty_sweep_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--eps="], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn surgery_logs_eigenvalue_drop() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["surgery", data("dumbbell_tail.dom").to_str().unwrap(), "--no-sensitivity"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let p = &json(&dir.path().join("surgery.json"))["payload"];
    let first = &p["passes"][0];
    assert_eq!(first["case"], "cut");
    assert!(first["lambda_after"].as_f64().unwrap() < first["lambda_before"].as_f64().unwrap());
    assert!(dir.path().join("surgery_result.dom").exists());
}

#[test]
fn necklace_scan_reports_flip() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["necklace", "--delta", "0.4", "--eps-scan", "--grid", "128"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let flip = &json(&dir.path().join("necklace.json"))["payload"]["flip"];
    assert!(flip["epsilon_numeric"].as_f64().unwrap() > 0.0);
}

#[test]
fn optimize_mode_start_moves_towards_ball() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["optimize", "--mode", "a2=0.15", "--eps", "1e-3", "--grid", "96", "--max-iter", "40"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let p = &json(&dir.path().join("optimize.json"))["payload"];
    assert!(p["final_asymmetry"].as_f64().unwrap() < 0.05, "{p}");
    assert_eq!(p["quarter_ball_bound"], true);
    assert!(dir.path().join("trace.csv").exists());
}
