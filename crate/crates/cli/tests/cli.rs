use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infobottle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn fig1_discrete_sweep_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let o = run(&[
        "sweep",
        "--scenario",
        "fig1-discrete",
        "--grid",
        "0:5:0.05",
        "--cost",
        "raw",
        "--beta",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,compression,precision,total");
    assert_eq!(lines.len(), 102);
    let row = lines.iter().find(|l| l.starts_with("3.100000,")).unwrap();
    assert_eq!(row.split(',').nth(1), Some("0.468996"));
}

#[test]
fn continuous_gap_prints_inf() {
    let o = run(&["eval", "--scenario", "fig1-continuous", "--cost", "raw", "--param", "2.0"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(row.split(',').nth(2), Some("inf"));
    assert!(!stdout(&o).contains("NaN"));
}

#[test]
fn bound_check_rows_and_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = run(&["bound-check", "--trials", "1000", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",false")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 violations"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["probe", "--scenario", "fig3", "--encoder", "f_i", "--noise", "uniform:0.2", "--seed", "4", "--n", "5000"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let sweep = ["sweep", "--scenario", "fig1-dataset", "--grid", "0:5:0.05"];
    assert_eq!(run(&sweep).stdout, run(&sweep).stdout);
    let train = ["train", "--scenario", "fig2", "--seed", "3", "--steps", "40", "--eval-every", "20"];
    let a = run(&train);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run(&train).stdout);
    assert_eq!(stdout(&a).lines().count(), 41);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["sweep", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--grid", "0:5"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--scenario", "nowhere", "--param", "1"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--cost", "noisy", "--param", "1"]).status.code(), Some(2));
    assert_eq!(run(&["probe", "--scenario", "fig3", "--encoder", "f_i", "--noise", "uniform:0.2"]).status.code(), Some(2));
    let o = run(&["eval", "--beta", "0.5", "--param", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn parse_errors_exit_three_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    fs::write(&path, "point 0.5 1 0\nbox oops 0 1 1\n").unwrap();
    let o = run(&["eval", "--scenario", path.to_str().unwrap(), "--param", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn scenario_and_network_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.txt");
    fs::write(&s, "point 0.5 0 0\npoint 0.5 1 1\n").unwrap();
    let n = dir.path().join("n.txt");
    fs::write(&n, "layer identity none 0 1 1 1 0\n").unwrap();
    let o = run(&["eval", "--scenario", s.to_str().unwrap(), "--net", n.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "raw,2,1.000000,1.000000,-1.000000,,");
}

#[test]
fn decision_and_dims_outputs() {
    let o = run(&["eval", "--scenario", "fig2", "--encoder", "f2_cont", "--cost", "decision", "--rule", "threshold:0.5"]);
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "decision,2,1.000000,0.000000,1.000000,,");
    let o = run(&["dims", "--scenario", "fig1-continuous", "--m", "2,4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("m,shannon_slope,renyi2_slope"));
}

#[test]
fn every_subcommand_has_help_with_schema() {
    for cmd in ["sweep", "eval", "train", "dims", "bound-check", "probe"] {
        let o = run(&[cmd, "--help"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("CSV columns"), "{cmd}");
    }
}
