use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-expfunc"))
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn exponent_on_brownian_kappa_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), r#"{"process":{"kind":"brownian_drift","q":1,"gamma":0.5},"seed":42}"#);
    let out = bin().args(["exponent", "--config", &c, "--lambda", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "psi,2,1.0"), "{text}");
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), r#"{"seed":42,"n":10000,"dt":0.02,"y":2}"#);
    let mut reports = Vec::new();
    for (i, workers) in ["1", "3"].into_iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let status = bin()
            .args(["verify", "affine", "--config", &c, "--workers", workers, "--out"])
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(status.code() == Some(0) || status.code() == Some(1));
        reports.push(std::fs::read(out_dir.join("affine.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(run(&["verify", "unknown_suite", "--seed", "1"]), Some(2));
    assert_eq!(run(&["verify", "analytics", "--seed", "1", "--out", dir.path().to_str().unwrap()]), Some(0));
    let c = write_config(dir.path(), r#"{"process":{"kind":"brownian_drift","q":1,"gamma":0.5}}"#);
    let out = bin().args(["estimate", "--config", &c]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("$.seed"));
    // the large-lambda asymptote checks of the Poisson suite fail deterministically
    assert_eq!(run(&["verify", "poisson", "--seed", "1", "--n", "10000"]), Some(1));
}

#[test]
fn tail_curves_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["verify", "left_tail", "--seed", "4", "--n", "10000", "--y", "6", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.code().is_some());
    let csv = std::fs::read_to_string(dir.path().join("left_tail.csv")).unwrap();
    assert!(csv.starts_with("x,ecdf,dkw_lo,dkw_hi,prediction\n"));
    assert_eq!(csv.lines().count(), 17);
}
