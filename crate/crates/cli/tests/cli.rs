use std::path::Path;
use std::process::{Command, Output};

fn maxglm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxglm"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn matrix_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = maxglm(dir.path(), &["check", "--suite", "matrices"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!maxglm(dir.path(), &["check", "--suite", "nope"]).status.success());
    assert!(!maxglm(dir.path(), &["convergence", "--scheme", "rk4"]).status.success());
    let o = maxglm(dir.path(), &["run", "--config", "/does/not/exist.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_outputs_and_applies_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, "scheme = simm\nic = gauss_t2\nn = 12\nt_end = 0.3\n").unwrap();
    let o = maxglm(
        dir.path(),
        &["run", "--config", cfg.to_str().unwrap(), "--override", "ch=3", "--override", "dt=0.05"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = dir.path().join("small");
    for f in ["energy.csv", "divergence.csv", "summary.txt", "config.txt"] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
    let written = std::fs::read_to_string(run_dir.join("config.txt")).unwrap();
    let value = |key: &str| -> f64 {
        let line = written.lines().find(|l| l.split('=').next().unwrap().trim() == key).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    assert_eq!(value("ch"), 3.0);
    assert_eq!(value("dt"), 0.05);
    // 0.3 / 0.05 steps plus the initial row and the header.
    let energy = std::fs::read_to_string(run_dir.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 8);

    let bad = maxglm(dir.path(), &["run", "--config", cfg.to_str().unwrap(), "--override", "cfl=2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn ap_study_with_short_list() {
    let dir = tempfile::tempdir().unwrap();
    let o = maxglm(dir.path(), &["ap", "--ch", "1e2,1e3"]);
    assert!(o.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("ap").join("ap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
