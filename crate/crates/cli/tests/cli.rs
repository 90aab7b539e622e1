use oscillate_cli::{run_file, run_source, Command, RunError, RunOptions, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_OK};
use std::path::{Path, PathBuf};
use std::process;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn opts_in(dir: &Path) -> RunOptions {
    RunOptions { out_dir: Some(dir.to_path_buf()), jobs: Some(2), ..Default::default() }
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(['\t', ',']).map(str::to_string).collect())
        .collect()
}

#[test]
fn every_sample_config_runs_clean() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_file(&path, &opts_in(dir.path())).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(summary.exit_code(), EXIT_OK, "{}: {:?}", path.display(), summary.failures);
        assert!(!summary.artifacts.is_empty());
        for a in &summary.artifacts {
            assert!(std::fs::metadata(a).unwrap().len() > 0, "{} is empty", a.display());
        }
    }
}

#[test]
fn sphere_zeros_are_multiples_of_pi() {
    let dir = tempfile::tempdir().unwrap();
    run_file(&configs().join("sphere_solve.toml"), &opts_in(dir.path())).unwrap();
    let zeros = std::fs::read_to_string(dir.path().join("zeros.tsv")).unwrap();
    assert!(zeros.starts_with("# oscillate"));
    let mids: Vec<f64> = data_rows(&zeros).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(mids.len(), 3);
    for (k, m) in mids.iter().enumerate() {
        assert!((m - (k + 1) as f64 * std::f64::consts::PI).abs() < 1e-6);
    }
    let riccati = std::fs::read_to_string(dir.path().join("riccati.tsv")).unwrap();
    assert!(data_rows(&riccati).len() > 10);
}

#[test]
fn euler_sweep_flips_at_one_quarter() {
    let dir = tempfile::tempdir().unwrap();
    run_file(&configs().join("euler_sweep.toml"), &opts_in(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = data_rows(&csv);
    let moore = rows[0].iter().position(|c| c == "moore_liminf#0_status").unwrap();
    for r in &rows[1..] {
        let mu: f64 = r[0].parse().unwrap();
        assert_eq!(r[moore] == "SATISFIED", mu > 0.25, "mu = {mu}");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert!(json.is_object() || json.is_array());
}

#[test]
fn check_writes_the_main_b2_witness() {
    let dir = tempfile::tempdir().unwrap();
    run_file(&configs().join("main_b2_check.toml"), &opts_in(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("verdicts.json")).unwrap();
    let verdicts: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    let b2 = verdicts.iter().find(|v| v["criterion"] == "main_B2").unwrap();
    assert_eq!(b2["status"], "SATISFIED");
    let b = b2["witness"]["b"].as_f64().unwrap();
    assert!((b - 3.31304).abs() < 0.011, "b = {b}");
}

#[test]
fn config_errors_name_the_line() {
    let src = "[settings]\ncommand = \"check\"\n\n[[check]]\ncriterion = \"nosuch\"\n";
    let err = run_source(src, None, &RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    let msg = err.to_string();
    assert!(msg.contains("line 5") && msg.contains("nosuch"), "{msg}");

    let err = run_source("[settings\ncommand = 1", None, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, RunError::Config(_)));
    assert_eq!(err.exit_code(), EXIT_CONFIG);

    let src = "[curvature.k]\nk = \"1 +\"\n[[check]]\ncriterion = \"calabi\"\ntarget = \"k\"\n";
    let opts = RunOptions { command: Some(Command::Check), ..Default::default() };
    let msg = run_source(src, None, &opts).unwrap_err().to_string();
    assert!(msg.contains("line 2"), "{msg}");
}

#[test]
fn unknown_parameter_is_rejected() {
    let src = "[settings]\ncommand = \"check\"\n[[check]]\ncriterion = \"myers_galloway\"\nc = 1\nm = 3\nz = 2\n";
    let msg = run_source(src, None, &RunOptions::default()).unwrap_err().to_string();
    assert!(msg.contains("`z`"), "{msg}");
}

#[test]
fn hypothesis_violation_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let src = "[settings]\ncommand = \"check\"\n[pair.bad]\nv = \"1\"\nw = \"-4\"\nb = 1\n\
               [[check]]\ncriterion = \"first_zero\"\ntarget = \"bad\"\na = 0\nb = 2\n";
    let summary = run_source(src, None, &opts_in(dir.path())).unwrap();
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.exit_code(), EXIT_HYPOTHESIS);
}

#[test]
fn overrides_are_recorded_in_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { tol: Some(1e-9), ..opts_in(dir.path()) };
    run_file(&configs().join("sphere_solve.toml"), &opts).unwrap();
    let head = std::fs::read_to_string(dir.path().join("trajectory.tsv")).unwrap();
    assert!(head.lines().take_while(|l| l.starts_with('#')).any(|l| l.contains("tol") && l.contains("1e-09")), "{}", &head[..400]);
}

#[test]
fn binary_reports_artifacts_and_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_oscillate");
    let dir = tempfile::tempdir().unwrap();
    let out = process::Command::new(exe)
        .args(["geometry", "--config"])
        .arg(configs().join("geometry.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("geometry.tsv"));
    let geo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("geometry.json")).unwrap()).unwrap();
    let sphere = geo.as_array().unwrap().iter().find(|m| m["model"] == "sphere").unwrap();
    assert!((sphere["conjugate_radius"]["Finite"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-6);

    let missing = process::Command::new(exe).args(["check", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_CONFIG));
    let usage = process::Command::new(exe).args(["solve", "--tol", "-1"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_CONFIG));
    let bad_tol = process::Command::new(exe)
        .args(["solve", "--tol=-1", "--config"])
        .arg(configs().join("sphere_solve.toml"))
        .output()
        .unwrap();
    assert_eq!(bad_tol.status.code(), Some(EXIT_CONFIG));
}
