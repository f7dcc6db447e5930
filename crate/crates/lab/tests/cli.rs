use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maxfilter-lab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(sub: &str, config: &Path, seed: &str, out: &Path) -> (i32, String, String) {
    let output = lab()
        .args([sub, "--config", config.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    (
        output.status.code().unwrap(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

const C3_BOUNDS: &str = r#"{
  "group": {"family": "cyclic_rotation_2d", "m": 3},
  "templates": {"inline": [[1.0, 0.0], [0.5, 0.8660254037844386]]},
  "n_pairs": 200,
  "chi_samples": 200
}"#;

#[test]
fn bounds_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", C3_BOUNDS);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run("bounds", &config, "7", &out);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    assert!(stdout.contains("PASS sandwich_upper"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bounds_report.json")).unwrap()).unwrap();
    let beta = report["results"]["stability"]["beta_exact"].as_f64().unwrap();
    assert!((beta - 1.5f64.sqrt()).abs() < 1e-9);
    assert_eq!(report["results"]["chi"]["value"], 2);
    let csv = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
    assert!(out.join("bounds_timings.json").exists());
}

#[test]
fn template_csv_and_group_file_are_read() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("z.csv"), "1.0,0.0\n0.5,0.8660254037844386\n").unwrap();
    std::fs::write(
        dir.path().join("g.json"),
        r#"{"dim": 2, "generators": [[-0.5, -0.8660254037844386, 0.8660254037844386, -0.5]]}"#,
    )
    .unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"group": {"file": "g.json"}, "templates": {"path": "z.csv"}, "n_pairs": 50, "chi": 2}"#,
    );
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run("bounds", &config, "1", &out);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
}

#[test]
fn domain_error_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"group": {"family": "cyclic_rotation_2d", "m": 3}, "templates": {"gaussian": {"n": 15}}, "chi": 2, "lambda0": 4.0}"#,
    );
    let (code, _, stderr) = run("distortion", &config, "1", &dir.path().join("out"));
    assert_eq!(code, 2);
    assert!(stderr.contains("lambda"));
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", r#"{"group": {"family": "trivial", "d": 2}, "n_pairs": 0}"#);
    let (code, _, _) = run("chi", &config, "1", &dir.path().join("out"));
    assert_eq!(code, 2);
    let (code, _, _) = run("chi", &dir.path().join("missing.json"), "1", &dir.path().join("out"));
    assert_eq!(code, 2);
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", C3_BOUNDS);
    let status = lab().args(["bounds", "--config", config.to_str().unwrap()]).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"group": {"family": "cyclic_rotation_2d", "m": 3},
            "templates": {"gaussian": {"n": 6}}, "n_pairs": 20, "chi": 2,
            "budgets": {"beta_exact": 2}}"#,
    );
    let out = dir.path().join("out");
    let (code, _, _) = run("bounds", &config, "1", &out);
    assert_eq!(code, 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bounds_report.json")).unwrap()).unwrap();
    assert_eq!(report["certified"], false);
    assert_eq!(report["results"]["stability"]["beta_exact_certified"], false);
}

#[test]
fn failed_assertion_exits_with_one() {
    // two trials of two points are too few to expose the rotation group's indefinite kernel
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"group": {"family": "cyclic_rotation_2d", "m": 5}, "n_trials": 1, "points_per_trial": 1, "chi_samples": 100}"#,
    );
    let (code, _, stderr) = run("kernel", &config, "1", &dir.path().join("out"));
    assert_eq!(code, 1);
    assert!(stderr.contains("FAIL kernel_dichotomy"));
}

#[test]
fn kernel_maxfilter_and_chi_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let kernel = write_config(
        dir.path(),
        "k.json",
        r#"{"group": {"family": "plus_minus_id", "d": 1}, "n_trials": 100, "chi_samples": 100}"#,
    );
    let (code, stdout, stderr) = run("kernel", &kernel, "3", &out);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    let maxfilter = write_config(dir.path(), "m.json", r#"{"n_pairs": 20, "dims": [4, 64, 256]}"#);
    let (code, stdout, stderr) = run("maxfilter", &maxfilter, "3", &out);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    let chi = write_config(dir.path(), "x.json", r#"{"group": {"family": "dihedral_2d", "m": 4}, "chi_samples": 200}"#);
    let (code, _, _) = run("chi", &chi, "3", &out);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("chi_report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["chi"]["chi_lower"], 1);
}

#[test]
fn injectivity_runs_both_template_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"group": {"family": "sign_flips", "d": 2}, "n_pairs": 2000, "chi": 1}"#,
    );
    let (code, stdout, stderr) = run("injectivity", &config, "5", &out);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    assert!(stdout.contains("PASS no_collisions_n4"));
    assert!(stdout.contains("PASS no_collisions_n2"));
    assert!(stdout.contains("PASS alpha_tilde_positive_at_threshold"));
}
