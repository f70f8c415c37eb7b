//! End-to-end tests of the quditlab binary: CSV contract, exit codes,
//! determinism, config handling.

use std::path::Path;
use std::process::{Command, Output};

fn quditlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quditlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn fidelity_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1b.csv");
    let res = quditlab(&[
        "fidelity", "--model", "xprime", "--d", "2", "3", "--p", "0.01", "--steps", "30",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let text = read(&out);
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# quditlab seed=42"));
    let header = lines.next().unwrap();
    assert_eq!(header, "experiment,model,d,l0,l1,p,t,metric,value");
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields[0], "fidelity_vs_d");
    assert_eq!(fields[1], "xprime");
    assert_eq!(fields[2], "2");
    assert_eq!(fields[7], "process_fidelity");
    // 17 significant digits in scientific notation
    let v = fields[8];
    assert!(v.contains('e'), "value format: {v}");
    let mantissa = v.split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
    // 2 curves, 31 points each, plus comment and header
    assert_eq!(text.lines().count(), 2 + 2 * 31);
    // LF endings only
    assert!(!text.contains('\r'));
}

#[test]
fn identical_seed_gives_bit_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, jobs) in [(&a, "1"), (&b, "4")] {
        let res = quditlab(&[
            "entropy", "--model", "z", "--d", "2", "3", "--steps", "25", "--seed", "7",
            "--jobs", jobs, "--out", path.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    let (ta, tb) = (read(&a), read(&b));
    assert_eq!(ta, tb, "CSV differs between runs/job counts");
}

#[test]
fn fit_round_trip_recovers_d2_lifetime() {
    let dir = tempfile::tempdir().unwrap();
    let curves = dir.path().join("curves.csv");
    let table = dir.path().join("table.csv");
    let res = quditlab(&[
        "fidelity", "--model", "xprime", "--d", "2", "--steps", "400",
        "--out", curves.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let res = quditlab(&[
        "fit", "--in", curves.to_str().unwrap(), "--out", table.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = read(&table);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,b,tau,alpha");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    let tau: f64 = row[2].parse().unwrap();
    assert!((tau - 49.498).abs() < 0.5, "tau={tau}");
}

#[test]
fn qec_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qec.csv");
    let res = quditlab(&[
        "qec", "--model", "z", "--d", "2", "--taus", "1", "--p-points", "4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = read(&out);
    let with: Vec<f64> = text
        .lines()
        .filter(|l| l.contains("fidelity_with_qec"))
        .map(|l| l.split(',').nth(8).unwrap().parse().unwrap())
        .collect();
    assert_eq!(with.len(), 4);
    // small-p end must beat the bare baseline for the Z model
    let without: Vec<f64> = text
        .lines()
        .filter(|l| l.contains("fidelity_without_qec"))
        .map(|l| l.split(',').nth(8).unwrap().parse().unwrap())
        .collect();
    assert!(with[0] > without[0]);
}

#[test]
fn validate_passes_on_correct_build() {
    let res = quditlab(&["validate"]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(stdout.lines().count() >= 5);
}

#[test]
fn config_file_feeds_spec_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"family":"fidelity_vs_d","model":"z","d_values":[2],"steps":12,"p":0.02}"#,
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let res = quditlab(&[
        "fidelity", "--config", cfg.to_str().unwrap(), "--p", "0.05",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = read(&out);
    // flag --p overrides config p; config steps=12 and d=[2] hold
    assert!(text.contains(",z,2,0,1,0.05,"));
    assert_eq!(text.lines().count(), 2 + 13);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"family":"fidelity_vs_d","model":"z","bogus":1}"#).unwrap();
    let out = dir.path().join("out.csv");
    let res = quditlab(&[
        "fidelity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("configuration error"));
}

#[test]
fn bad_flag_exits_2() {
    let res = quditlab(&["fidelity", "--model", "nonsense", "--out", "/tmp/x.csv"]);
    assert_eq!(res.status.code(), Some(2));
    let res = quditlab(&["fidelity", "--p", "1.5", "--out", "/tmp/x.csv"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    // d=1 is not a qudit; the cell fails, others proceed
    let res = quditlab(&[
        "fidelity", "--model", "z", "--d", "2", "1", "--steps", "10",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    let text = read(&out);
    assert!(text.lines().any(|l| l.contains(",error,NaN")));
    assert!(text.lines().filter(|l| l.contains("process_fidelity")).count() == 11);
}

#[test]
fn plot_script_emitted_next_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    let res = quditlab(&[
        "fidelity", "--model", "z", "--d", "2", "--steps", "12", "--plot",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let gp = read(&dir.path().join("fig.gp"));
    assert!(gp.contains("set datafile separator ','"));
    assert!(gp.contains("awk -F, ''$3==2"));
    assert!(gp.contains("fig.csv"));
}
