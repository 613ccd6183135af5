use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fonspn_core::harness::export::read_trace_csv;

const SMALL: &str = r#"
master_seed = 5
trials = 3
total_samples = 6000
steady_window = 500
moment_frames = 10000

[system]
seed = 7
unit_norm = true

[input]
kind = "gaussian"
variance = 1.0
ar1_pole = 0.9

[noise]
kind = "gaussian"
variance = 0.001

[bank]
bands = 4
length = 32

[algo]
algorithm = "nsaf"
mu = 0.5
taps = 8
"#;

fn fonspn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fonspn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn design_bank_writes_one_row_per_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bank.csv");
    let res = fonspn(&[
        "design-bank",
        "--bands",
        "4",
        "--len",
        "32",
        "--out",
        s(&out),
    ]);
    assert!(res.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("band,c0,c1"));
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 33));
}

#[test]
fn design_bank_rejects_bad_length() {
    let res = fonspn(&["design-bank", "--bands", "4", "--len", "30"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn bounds_reports_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("bounds.csv");
    let res = fonspn(&["bounds", "--config", s(&cfg), "--out", s(&out)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("mu_bound"));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with('#'));
    assert!(text.contains("quantity,value"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        fonspn(&["simulate", "--config", s(&missing), "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );

    let cfg = small_config(dir.path());
    let res = fonspn(&[
        "simulate",
        "--config",
        s(&cfg),
        "--set",
        "algo.mu=-1",
        "--out",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let res = fonspn(&[
        "simulate",
        "--config",
        s(&cfg),
        "--set",
        "no_equals_sign",
        "--out",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(fonspn(&["simulate", "--config", s(&cfg), "--out", s(&a)])
        .status
        .success());
    assert!(fonspn(&["simulate", "--config", s(&cfg), "--out", s(&b)])
        .status
        .success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let text = fs::read_to_string(&a).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# "));
    let rows = read_trace_csv(&a).unwrap();
    assert_eq!(rows.len(), 1500);
    assert_eq!(rows[0].update_index, 0);
    assert!(rows.last().unwrap().nmsd_db_mean < -20.0);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("t.csv");
    let res = fonspn(&[
        "simulate",
        "--config",
        s(&cfg),
        "--samples",
        "400",
        "--trials",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(res.status.success());
    assert_eq!(read_trace_csv(&out).unwrap().len(), 100);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# total_samples = 400"));
}

#[test]
fn all_diverged_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("t.csv");
    let res = fonspn(&[
        "simulate",
        "--config",
        s(&cfg),
        "--mu",
        "50",
        "--out",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn sweep_and_steady_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let sweep = dir.path().join("sweep.csv");
    let res = fonspn(&[
        "sweep-mu",
        "--config",
        s(&cfg),
        "--grid",
        "0.5:3.5:1.5",
        "--out",
        s(&sweep),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(&sweep).unwrap();
    let data: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "mu,steady_nmsd_db,diverged_trials,trials");
    assert_eq!(data.len(), 4);
    assert!(data[3].ends_with(",3,3"), "{}", data[3]);

    let steady = dir.path().join("ss.csv");
    let res = fonspn(&[
        "steady",
        "--config",
        s(&cfg),
        "--mu-list",
        "0.2,0.4",
        "--out",
        s(&steady),
    ]);
    assert!(res.status.success());
    let text = fs::read_to_string(&steady).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}
