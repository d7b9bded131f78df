use std::fs;
use std::process::{Command, Output};

use qhomog::gates::{compile_circuit, distance_up_to_global_phase, swap_alpha};
use qhomog::qasm;

fn qhomog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhomog")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_writes_csv_to_stdout() {
    let o = qhomog(&["simulate", "--eta", "0.39269908169872414", "--rounds", "5", "--initial", "1", "--reservoir", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("round,rho_00_re,"));
}

#[test]
fn flags_override_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.spec");
    fs::write(&spec, "eta = 0.5\nrounds = 2\n").unwrap();
    let spec = spec.to_str().unwrap();
    assert_eq!(stdout(&qhomog(&["simulate", "--spec", spec])).lines().count(), 4);
    assert_eq!(stdout(&qhomog(&["simulate", "--spec", spec, "--rounds", "4"])).lines().count(), 6);
    // a flag-level alpha replaces the file's eta
    assert!(qhomog(&["simulate", "--spec", spec, "--alpha", "0.5"]).status.success());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("swap.qasm");
    let o = qhomog(&["decompose", "--alpha", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let program = qasm::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    let d = distance_up_to_global_phase(&compile_circuit(&program.circuit).unwrap(), &swap_alpha(1.0)).unwrap();
    assert!(d.distance < 1e-8);
}

#[test]
fn negative_angles_are_accepted() {
    assert!(qhomog(&["decompose", "--alpha", "-0.4"]).status.success());
    assert!(qhomog(&["analyze", "--eta", "-1.2", "--rounds", "2", "--initial", "-i"]).status.success());
}

#[test]
fn validation_errors_exit_one() {
    for args in [
        vec!["simulate", "--rounds", "3"],
        vec!["simulate", "--eta", "1", "--alpha", "1"],
        vec!["simulate", "--eta", "1", "--initial", "bloch:1,1,1"],
        vec!["simulate", "--eta", "1", "--mode", "full", "--rounds", "11"],
        vec!["simulate", "--eta", "1", "--delta", "2"],
        vec!["homogenize-qasm", "--alpha", "0.5", "--initial", "bloch:0,0,0.2"],
        vec!["homogenize-qasm", "--alpha", "0.5", "--rounds", "21"],
        vec!["analyze", "--eta", "1", "--rounds", "11"],
        vec!["simulate", "--spec", "/nonexistent/spec"],
        vec!["frobnicate"],
    ] {
        let o = qhomog(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_fails() {
    let o = qhomog(&["decompose", "--alpha", "0.5", "--out", "/nonexistent/dir/x.qasm"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn homogenize_measure_flag() {
    let with = stdout(&qhomog(&["homogenize-qasm", "--alpha", "0.5", "--rounds", "2", "--measure"]));
    let without = stdout(&qhomog(&["homogenize-qasm", "--alpha", "0.5", "--rounds", "2"]));
    assert!(with.contains("measure q[0] -> c[0];"));
    assert!(!without.contains("measure"));
    assert!(with.contains("qreg q[3];"));
}

#[test]
fn analyze_json_is_stable() {
    let a = stdout(&qhomog(&["analyze", "--eta", "0", "--rounds", "1"]));
    let b = stdout(&qhomog(&["analyze", "--eta", "0", "--rounds", "1"]));
    assert_eq!(a, b);
    assert!(a.contains("\"forgetfulness\": 1.0000000000000000e0"));
}
