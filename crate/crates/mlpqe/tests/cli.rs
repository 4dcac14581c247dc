//! End-to-end checks of the command-line driver and its artifacts.

mod common;

use std::path::Path;
use std::process::Command;

fn mlpqe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlpqe"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn run_produces_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h2");
    let status = mlpqe()
        .args([
            "run",
            "--fcidump",
            &common::fixture_path("h2_0.7414"),
            "--output-dir",
            out.to_str().unwrap(),
            "--dump-theta",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "conventional_trace.csv",
        "conventional_trace.json",
        "ml_trace.csv",
        "ml_trace.json",
        "model.json",
        "summary.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    // summary arithmetic recomputes from the parts
    let e_conv = summary["conventional"]["final_energy"].as_f64().unwrap();
    let e_ml = summary["ml"]["final_energy"].as_f64().unwrap();
    let diff = summary["difference"].as_f64().unwrap();
    assert_eq!(diff, (e_ml - e_conv).abs());
    let e_fci = summary["system"]["e_fci"].as_f64().unwrap();
    assert_eq!(
        summary["conventional"]["error_vs_fci"].as_f64().unwrap(),
        (e_conv - e_fci).abs()
    );
    // trace CSV agrees with the summary iteration count
    let csv = read(&out, "conventional_trace.csv");
    assert_eq!(
        csv.lines().count() - 1,
        summary["conventional"]["iterations"].as_u64().unwrap() as usize
    );
}

#[test]
fn identical_configs_give_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let status = mlpqe()
            .args([
                "run",
                "--fcidump",
                &common::fixture_path("h4_0.75"),
                "--output-dir",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((
            read(&out, "conventional_trace.csv"),
            read(&out, "ml_trace.csv"),
            read(&out, "model.json"),
            read(&out, "summary.json"),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn missing_fixture_fails_and_names_the_path() {
    let output = mlpqe()
        .args(["run", "--fcidump", "/no/such/file.fcidump"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/no/such/file.fcidump"), "stderr: {stderr}");
}

#[test]
fn compare_single_geometry_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let status = mlpqe()
        .args([
            "compare",
            "--output-dir",
            out.to_str().unwrap(),
            "--fcidumps",
            &common::fixture_path("h2_0.7414"),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let table = read(&out, "comparison.csv");
    let mut lines = table.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("fixture,e_conventional,e_ml"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "h2_0.7414");
    let e_conv: f64 = row[1].parse().unwrap();
    let e_ml: f64 = row[2].parse().unwrap();
    let diff: f64 = row[3].parse().unwrap();
    assert_eq!(diff, (e_ml - e_conv).abs());
    assert!(diff < 1e-6);
}

#[test]
fn report_emits_symmetric_distance_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let fixture = common::fixture_path("h4_0.75");
    assert!(mlpqe()
        .args([
            "run",
            "--fcidump",
            &fixture,
            "--mode",
            "conventional",
            "--output-dir",
            out.to_str().unwrap(),
            "--dump-theta",
        ])
        .status()
        .unwrap()
        .success());
    let report_out = dir.path().join("report");
    assert!(mlpqe()
        .args([
            "report",
            "--fcidump",
            &fixture,
            "--trace",
            out.join("conventional_trace.json").to_str().unwrap(),
            "--output-dir",
            report_out.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    for name in [
        "distance_matrix_full.csv",
        "distance_matrix_subset.csv",
        "energy_error.csv",
        "wavefunction_error.csv",
    ] {
        assert!(report_out.join(name).exists(), "missing {name}");
    }
    let matrix: Vec<Vec<f64>> = read(&report_out, "distance_matrix_full.csv")
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let n = matrix.len();
    for row in &matrix {
        assert_eq!(row.len(), n);
    }
    for x in 0..n {
        assert_eq!(matrix[x][x], 0.0);
        for y in 0..n {
            assert_eq!(matrix[x][y], matrix[y][x]);
        }
    }
}

#[test]
fn noise_sweep_emits_paired_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let status = mlpqe()
        .args([
            "noise-sweep",
            "--fcidump",
            &common::fixture_path("h4_0.75"),
            "--output-dir",
            out.to_str().unwrap(),
            "--sigmas",
            "1e-4",
            "--alphas",
            "1e-6",
            "--replicas",
            "2",
            "--seed",
            "11",
            "--max-iterations",
            "40",
            "--lrnt",
            "0.02",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["conventional_sigma1e-4.csv", "ml_sigma1e-4.csv"] {
        let text = read(&out, name);
        assert!(text.starts_with(
            "iteration,mean_energy_error,std_energy_error,mean_wf_error,std_wf_error"
        ));
        assert!(text.lines().count() > 2, "{name} too short");
    }
}
