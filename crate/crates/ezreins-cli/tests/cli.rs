//! End-to-end runs of the `ezreins` binary.

use std::fs;
use std::process::{Command, Output};

fn ezreins(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ezreins"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

/// CSV lines after the comment block.
fn table(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(ezreins(&["validate"]).status.code(), Some(0));
    let bad = ezreins(&["validate", "--set", "b=0.9"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("premium_loading,hard,false"));
    assert_eq!(ezreins(&["validate", "--set", "gamma=1"]).status.code(), Some(1));
    assert_eq!(ezreins(&["validate", "--set", "nope=1"]).status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = ezreins(&[
            "simulate",
            "--paths",
            "40",
            "--seed",
            "7",
            "--measure",
            "qxi",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed = 7"));
    assert!(text.contains("# n_paths = 40"));
    let other = ezreins(&["simulate", "--paths", "40", "--seed", "8", "--measure", "qxi"]);
    assert_ne!(table(&stdout(&other)), table(&text));
}

#[test]
fn every_command_echoes_parameters_and_header() {
    let cases: [&[&str]; 5] = [
        &["solve", "--m-steps", "3"],
        &["sweep", "--param", "alpha", "--from", "3", "--to", "7", "--steps", "3"],
        &["table2", "--sigmas", "0.8"],
        &["verify", "--suite", "bounds"],
        &["simulate", "--what", "surplus", "--paths", "2", "--dt", "0.05"],
    ];
    for args in cases {
        let o = ezreins(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains("# gamma = 1.2") || text.contains("# gamma = 1.3"), "{args:?}");
        let rows = table(&text);
        assert!(rows.len() >= 2, "{args:?}");
        let width = rows[0].split(',').count();
        assert!(rows.iter().all(|r| r.split(',').count() == width), "{args:?}");
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.cfg");
    fs::write(&path, "# study\ngamma = 1.3\nPhi = 0\n").unwrap();
    let o = ezreins(&["solve", "--config", path.to_str().unwrap(), "--set", "sigma=0.5", "--m-steps", "1"]);
    let text = stdout(&o);
    assert!(text.contains("# gamma = 1.3"));
    assert!(text.contains("# sigma = 0.5"));
    let row: Vec<&str> = table(&text)[1].split(',').collect();
    // Without ambiguity every distortion vanishes.
    assert_eq!(&row[9..], ["0", "0", "0"]);
    fs::write(&path, "gamma = 1.3\nbogus = 1\n").unwrap();
    let o = ezreins(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn reinsurance_column_is_closed_form() {
    let text = stdout(&ezreins(&["solve", "--m-steps", "5"]));
    for row in table(&text).iter().skip(1) {
        assert_eq!(row.split(',').nth(7), Some("0.08"));
    }
}

#[test]
fn verify_exit_status_ignores_check_outcomes() {
    // The report is the product; the exit status ignores check outcomes.
    let o = ezreins(&["verify", "--suite", "mc", "--points", "2", "--paths", "2000", "--dt", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(table(&stdout(&o))[0] == "check,point,value,tolerance,pass");
}
