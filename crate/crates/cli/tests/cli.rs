use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmdmodal")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: PathBuf) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn pole(v: &Value, i: usize) -> (f64, f64) {
    let p = &v["poles"][i];
    (p["frequency_hz"].as_f64().unwrap(), p["damping_ratio"].as_f64().unwrap())
}

#[test]
fn generate_sdof_preset() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "sdof-paper"]);
    let rows = data_rows(dir.path().join("sdof-paper.csv"));
    assert_eq!(rows.len(), 1024);
    assert_eq!(rows[0].len(), 2);
    assert!((rows[1023][0] - 1.0).abs() < 1e-12);
    let truth = json(dir.path().join("sdof-paper_truth.json"));
    assert_eq!(truth["kind"], "ground_truth");
    assert_eq!(truth["config"]["seed"], 0);
    let (f, z) = pole(&truth, 0);
    assert!((f - 50.0).abs() < 1e-4 && (z - 0.01).abs() < 1e-6);
}

#[test]
fn generate_chain_preset() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    let rows = data_rows(dir.path().join("chain6-paper.csv"));
    assert_eq!(rows.len(), 2001);
    assert_eq!(rows[0].len(), 7);
    assert_eq!(rows[2000][0], 1000.0);
    let truth = json(dir.path().join("chain6-paper_truth.json"));
    assert_eq!(truth["poles"].as_array().unwrap().len(), 6);
}

#[test]
fn seeded_noise_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--preset", "sdof-paper", "--noise", "1e-2", "--seed", "7"];
    ok(dir.path(), &args);
    let first = std::fs::read(dir.path().join("sdof-paper.csv")).unwrap();
    ok(dir.path(), &args);
    assert_eq!(first, std::fs::read(dir.path().join("sdof-paper.csv")).unwrap());
    ok(dir.path(), &["generate", "--preset", "sdof-paper", "--noise", "1e-2", "--seed", "8"]);
    assert_ne!(first, std::fs::read(dir.path().join("sdof-paper.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("# config=") && text.contains("\"seed\":7"));
}

#[test]
fn identify_dmd_and_itd_agree() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "sdof-paper"]);
    let summary = ok(
        dir.path(),
        &["identify", "--input", "sdof-paper.csv", "--method", "dmd", "--augment", "--truncation", "rel:1e-10"],
    );
    assert!(summary.contains("49.99"));
    let dmd = json(dir.path().join("sdof-paper_dmd.json"));
    assert_eq!(dmd["config"]["truncation"], "rel:1e-10");
    let (f, z) = pole(&dmd, 0);
    assert!((f - 50.0).abs() < 0.01 && (z - 0.01).abs() < 1e-4);
    ok(dir.path(), &["identify", "--input", "sdof-paper.csv", "--method", "itd"]);
    let itd = json(dir.path().join("sdof-paper_itd.json"));
    for i in 0..2 {
        for c in 0..2 {
            let a = dmd["poles"][i]["mu"][c].as_f64().unwrap();
            let b = itd["poles"][i]["mu"][c].as_f64().unwrap();
            assert!((a - b).abs() <= 1e-8, "mu[{i}][{c}]: {a} vs {b}");
        }
    }
    assert!(dir.path().join("sdof-paper_dmd_summary.txt").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    ok(dir.path(), &["identify", "--input", "chain6-paper.csv"]);
    let first = std::fs::read(dir.path().join("chain6-paper_dmd.json")).unwrap();
    ok(dir.path(), &["identify", "--input", "chain6-paper.csv"]);
    assert_eq!(first, std::fs::read(dir.path().join("chain6-paper_dmd.json")).unwrap());
}

#[test]
fn dmd_sweep_selects_six_poles() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    ok(dir.path(), &["sweep", "--input", "chain6-paper.csv", "--fs-grid", "div:20"]);
    let report = json(dir.path().join("chain6-paper_selected.json"));
    let truth = json(dir.path().join("chain6-paper_truth.json"));
    let selected = report["selected_poles"].as_array().unwrap();
    assert_eq!(selected.len(), 6);
    for (i, p) in selected.iter().enumerate() {
        let f = p["frequency_hz"].as_f64().unwrap();
        let (fr, _) = pole(&truth, i);
        assert!((f - fr).abs() / fr < 1e-3);
    }
    assert_eq!(report["config"]["fs_grid_hz"].as_array().unwrap().len(), 20);
    let csv = std::fs::read_to_string(dir.path().join("chain6-paper_sweep.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "sampling_frequency_hz,frequency_hz,zeta,stable_flag,cluster_id"));
}

#[test]
fn lscf_order_sweep_finds_six_clusters() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["frf", "--preset", "chain6-paper"]);
    ok(dir.path(), &["sweep", "--input", "chain6-paper_frf.csv", "--max-order", "60", "--threshold", "1"]);
    let report = json(dir.path().join("chain6-paper_frf_selected.json"));
    assert_eq!(report["axis"], "order");
    assert_eq!(report["selected_poles"].as_array().unwrap().len(), 6);
    ok(dir.path(), &["lscf", "--input", "chain6-paper_frf.csv", "--max-order", "60"]);
    let fit = json(dir.path().join("chain6-paper_frf_lscf.json"));
    assert_eq!(fit["kind"], "lscf");
}

#[test]
fn empty_grid_is_a_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    let out_dir = dir.path().join("out");
    let out = run(
        dir.path(),
        &["--output-dir", out_dir.to_str().unwrap(), "sweep", "--input", "chain6-paper.csv", "--fs-grid", ""],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn indivisible_rate_lists_valid_rates() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    let out = run(dir.path(), &["sweep", "--input", "chain6-paper.csv", "--fs-grid", "0.3,2"]);
    assert_eq!(out.status.code(), Some(25));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("0.3") && err.contains("0.6666"));
    assert!(!dir.path().join("chain6-paper_sweep.csv").exists());
}

#[test]
fn error_classes_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run(dir.path(), &["identify", "--input", "missing.csv"]);
    assert_eq!(missing.status.code(), Some(3));
    std::fs::write(dir.path().join("jitter.csv"), "t,x\n0,1\n1,2\n2.5,3\n3,4\n").unwrap();
    let jitter = run(dir.path(), &["identify", "--input", "jitter.csv"]);
    assert_eq!(jitter.status.code(), Some(13));
    assert!(String::from_utf8(jitter.stderr).unwrap().contains("jitter.csv"));
    std::fs::write(dir.path().join("bad.csv"), "t,x\n0,1\n1,oops\n2,3\n").unwrap();
    assert_eq!(run(dir.path(), &["identify", "--input", "bad.csv"]).status.code(), Some(14));
    let unknown = run(dir.path(), &["generate", "--preset", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn compare_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    ok(dir.path(), &["identify", "--input", "chain6-paper.csv"]);
    ok(dir.path(), &["compare", "--input", "chain6-paper_dmd.json", "--reference", "chain6-paper_truth.json"]);
    let mac = data_rows_labelled(dir.path().join("chain6-paper_dmd_vs_chain6-paper_truth_mac.csv"));
    for (i, row) in mac.iter().enumerate() {
        assert!(row[i] >= 99.99, "diagonal {i}: {}", row[i]);
    }
    let errors = data_rows_labelled(dir.path().join("chain6-paper_dmd_vs_chain6-paper_truth_errors.csv"));
    assert_eq!(errors.len(), 6);
    assert!(errors.iter().all(|r| r[2] <= 0.1));
}

#[test]
fn compare_file_with_itself_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    ok(dir.path(), &["compare", "--input", "chain6-paper_truth.json", "--reference", "chain6-paper_truth.json"]);
    let mac = data_rows_labelled(dir.path().join("chain6-paper_truth_vs_chain6-paper_truth_mac.csv"));
    for (i, row) in mac.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let expected = if i == j { 100.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-6, "({i}, {j}) = {v}");
        }
    }
}

#[test]
fn heavy_noise_degrades_higher_modes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper", "--noise", "1e-2", "--seed", "3"]);
    ok(dir.path(), &["identify", "--input", "chain6-paper.csv"]);
    ok(dir.path(), &["--output-dir", "cmp", "generate", "--preset", "chain6-paper"]);
    ok(dir.path(), &["compare", "--input", "chain6-paper_dmd.json", "--reference", "cmp/chain6-paper_truth.json"]);
    let errors = data_rows_labelled(dir.path().join("chain6-paper_dmd_vs_chain6-paper_truth_errors.csv"));
    let degraded = errors[1..].iter().filter(|r| r[6] < 90.0).count();
    assert!(degraded >= 3, "only {degraded} degraded modes");
}

#[test]
fn channel_mismatch_is_incompatible() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--preset", "chain6-paper"]);
    ok(dir.path(), &["generate", "--preset", "sdof-paper"]);
    let out =
        run(dir.path(), &["compare", "--input", "sdof-paper_truth.json", "--reference", "chain6-paper_truth.json"]);
    assert_eq!(out.status.code(), Some(27));
}

#[test]
fn window_and_custom_system() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("chain3.json"),
        r#"{"masses":[1,2,1],"springs":[1,1,2],"alpha":0.01,"force":[0,0,1],"sampling_rate_hz":4,"duration_s":400}"#,
    )
    .unwrap();
    ok(dir.path(), &["generate", "--system", "chain3.json"]);
    assert_eq!(data_rows(dir.path().join("chain3.csv")).len(), 1601);
    ok(dir.path(), &["identify", "--input", "chain3.csv", "--window-start", "100", "--window-length", "800"]);
    let res = json(dir.path().join("chain3_dmd.json"));
    assert_eq!(res["config"]["window_length"], 800);
    let truth = json(dir.path().join("chain3_truth.json"));
    let positive: Vec<f64> = res["poles"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["s"][1].as_f64().unwrap() > 0.0)
        .map(|p| p["frequency_hz"].as_f64().unwrap())
        .collect();
    for i in 0..3 {
        let (f, _) = pole(&truth, i);
        assert!(positive.iter().any(|g| (g - f).abs() / f < 1e-3), "mode {f} missing from {positive:?}");
    }
}

/// Rows of a CSV whose first column is a label; empty cells parse as NaN.
fn data_rows_labelled(path: PathBuf) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}
