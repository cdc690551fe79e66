use std::path::Path;
use std::process::{Command, Output};

fn verifier(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verifier"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn verifier")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn describe_lists_anchors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = verifier(&["describe"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Kinetic energy localization"));
    assert!(text.contains("the following useful identity"));
    assert!(text.lines().all(|l| l.split('\t').count() == 3));
}

#[test]
fn budget_run_passes_and_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"suites": ["budget"]}"#);
    let out = verifier(&["run", "--config", &cfg, "--out", "reports"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(tmp.path().join("reports/report.json")).unwrap();
    assert!(report.contains("\"feasibility_frontier\""));
    assert!(report.contains("2/11"));
    let csv = std::fs::read_to_string(tmp.path().join("reports/budget.csv")).unwrap();
    assert!(csv.starts_with("kappa,"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"suites": ["budget", "scattering", "graph"], "seed": 3}"#,
    );
    for d in ["a", "b"] {
        let out = verifier(&["run", "--config", &cfg, "--out", d], tmp.path());
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["report.json", "budget.csv", "scattering.csv", "graph.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn json_only_format_skips_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = verifier(
        &[
            "run",
            "--set",
            r#"suites=["budget"]"#,
            "--set",
            "format=json",
            "--out",
            "r",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("r/report.json").exists());
    assert!(!tmp.path().join("r/budget.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write_config(tmp.path(), r#"{"suites": []}"#);
    let out = verifier(&["run", "--config", &empty], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suites"));

    let unknown = write_config(tmp.path(), r#"{"suites": ["budget"], "bogus": 1}"#);
    assert_eq!(
        verifier(&["run", "--config", &unknown], tmp.path()).status.code(),
        Some(2)
    );

    let bad_set = verifier(&["run", "--set", "graph.nope=3"], tmp.path());
    assert_eq!(bad_set.status.code(), Some(2));

    let missing = verifier(&["run", "--config", "does-not-exist.json"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(verifier(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(verifier(&[], tmp.path()).status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    // the split target is not reached at this cutoff
    let out = verifier(
        &[
            "run",
            "--set",
            r#"suites=["symmetrization"]"#,
            "--set",
            "symmetrization.boundary_ells=[8,16]",
            "--out",
            "r",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(tmp.path().join("r/report.json")).unwrap();
    assert!(report.contains("\"verdict\": \"fail\""));
}
