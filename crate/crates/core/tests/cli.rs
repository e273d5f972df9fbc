//! End-to-end checks of the `robinopt` binary: exit codes, output files and
//! determinism of the CSV reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn robinopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robinopt"))
        .args(args)
        .output()
        .expect("failed to launch robinopt binary")
}

fn temp_dir(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("robinopt-cli-{label}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn solve_succeeds_and_is_deterministic() {
    let out_a = temp_dir("solve-a");
    let out_b = temp_dir("solve-b");
    for out in [&out_a, &out_b] {
        let result = robinopt(&[
            "solve",
            "--instance",
            "quartic",
            "--mesh",
            "3,12",
            "--seeds",
            "0,1,2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            result.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&result.stderr)
        );
        assert!(out.join("solution.csv").is_file());
        assert!(out.join("report.json").is_file());
        assert!(out.join("manifest.json").is_file());
    }
    // Identical invocations must produce byte-identical reports.
    assert_eq!(
        read(&out_a.join("solution.csv")),
        read(&out_b.join("solution.csv"))
    );
    assert_eq!(
        read(&out_a.join("report.json")),
        read(&out_b.join("report.json"))
    );

    let manifest = read(&out_a.join("manifest.json"));
    assert!(manifest.contains("\"instance_sha256\""));
    let _ = std::fs::remove_dir_all(out_a);
    let _ = std::fs::remove_dir_all(out_b);
}

#[test]
fn sweep_writes_fixed_header() {
    let out = temp_dir("sweep");
    let result = robinopt(&[
        "sweep",
        "--instance",
        "quartic",
        "--mesh",
        "2,8",
        "--dir-lambda1",
        "1",
        "--profile",
        "constant",
        "--factors",
        "1,0.5",
        "--seeds",
        "0,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        result.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let csv = read(&out.join("sweep.csv"));
    assert!(csv.starts_with("n,param_distance,excess,value_gap,control_gap,state_gap\n"));
    assert_eq!(csv.lines().count(), 4, "base row plus one row per factor");
    let _ = std::fs::remove_dir_all(out);
}

#[test]
fn usage_errors_exit_one() {
    let missing = robinopt(&[
        "solve",
        "--instance",
        "/nonexistent/inst.json",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(missing.status.code(), Some(1));

    let bad_mesh = robinopt(&[
        "solve",
        "--instance",
        "quartic",
        "--mesh",
        "0,8",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(bad_mesh.status.code(), Some(1));
}

#[test]
fn failed_assumptions_exit_three() {
    let dir = temp_dir("mutant");
    let path = dir.join("mutant.json");
    std::fs::write(
        &path,
        r#"{"L":"y^2","l":"y^2","phi":"t","f":"y^3","g":"0",
           "coeffs":{"a11":"1","a12":"0","a22":"1","a0":"1"},
           "eps0":1.0,"gamma":0.5,"k_phi":1.0,"theta":1.0}"#,
    )
    .unwrap();
    let result = robinopt(&["check-assumptions", "--instance", path.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(
        stdout.contains("A3"),
        "expected an A3 witness, got: {stdout}"
    );
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn check_assumptions_passes_on_builtin() {
    let result = robinopt(&["check-assumptions", "--instance", "quartic"]);
    assert_eq!(result.status.code(), Some(0));
}
