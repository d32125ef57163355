//! End-to-end tests of the command-line interface.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_partref"))
}

fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("partref-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const FIG1A: &str = "functor: P X\n\
    state x0: {x1, x2}\n\
    state x1: {x1, x2}\n\
    state x2: {x3, x4}\n\
    state x3: {}\n\
    state x4: {}\n";

const FIG1B: &str = "functor: Q X\n\
    state x0: {x1: 1/2, x2: 3/2}\n\
    state x1: {x1: 1, x2: 1}\n\
    state x2: {x3: 1, x4: -1}\n\
    state x3: {}\n\
    state x4: {}\n";

#[test]
fn minimize_transition_system() {
    let path = write_temp("fig1a.txt", FIG1A);
    let out = bin().arg("minimize").arg(&path).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "x0 x1\nx2\nx3 x4\n");
}

#[test]
fn minimize_weighted_system() {
    let path = write_temp("fig1b.txt", FIG1B);
    let out = bin().arg("minimize").arg(&path).arg("--oracle").output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "x0\nx1\nx2 x3 x4\n");
}

#[test]
fn malformed_file_exits_2_without_output() {
    let path = write_temp("bad.txt", "functor: P X\nstate a: {unknown}\n");
    let out = bin().arg("minimize").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out), "");
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn missing_file_exits_4() {
    let out = bin().arg("minimize").arg("/nonexistent/x.txt").output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn weight_overflow_exits_4() {
    let path = write_temp(
        "overflow.txt",
        "functor: Z X\nstate a: {b: 9223372036854775807, a: 1}\nstate b: {}\n",
    );
    let out = bin().arg("minimize").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("overflow"));
}

#[test]
fn stats_go_to_stderr() {
    let path = write_temp("fig1a-stats.txt", FIG1A);
    let out = bin()
        .arg("minimize")
        .arg(&path)
        .arg("--stats")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "x0 x1\nx2\nx3 x4\n");
    let err = stderr(&out);
    for key in ["n=", "m=", "splits=", "max_subblock_memberships=", "middle_total="] {
        assert!(err.contains(key), "missing {key} in stats: {err}");
    }
}

#[test]
fn quotient_output_is_a_fixpoint() {
    let path = write_temp("fig1b-quotient.txt", FIG1B);
    let out = bin()
        .arg("minimize")
        .arg(&path)
        .arg("--output")
        .arg("coalgebra")
        .output()
        .unwrap();
    assert!(out.status.success());
    let quotient = stdout(&out);
    let qpath = write_temp("fig1b-quotient2.txt", &quotient);
    let again = bin()
        .arg("minimize")
        .arg(&qpath)
        .arg("--output")
        .arg("coalgebra")
        .output()
        .unwrap();
    assert!(again.status.success());
    assert_eq!(stdout(&again), quotient);
}

#[test]
fn both_mode_prints_partition_then_system() {
    let path = write_temp("fig1a-both.txt", FIG1A);
    let out = bin()
        .arg("minimize")
        .arg(&path)
        .arg("--output")
        .arg("both")
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.starts_with("x0 x1\nx2\nx3 x4\n\n"));
    assert!(text.contains("functor: P X"));
}

#[test]
fn initial_partition_flag() {
    let path = write_temp("fig1a-init.txt", FIG1A);
    let classes = write_temp("classes.txt", "class a: x3\nclass b: x4\n");
    let out = bin()
        .arg("minimize")
        .arg(&path)
        .arg("--initial")
        .arg(&classes)
        .arg("--oracle")
        .output()
        .unwrap();
    assert!(out.status.success());
    // separating x3 from x4 changes nothing upstream: both are deadlocks
    assert_eq!(stdout(&out), "x0 x1\nx2\nx3\nx4\n");
}

#[test]
fn json_input() {
    let json = r#"{"functor": "P X", "states": [
        {"name": "a", "value": {"Set": [{"Name": "b"}]}},
        {"name": "b", "value": {"Set": [{"Name": "a"}]}}
    ]}"#;
    let path = write_temp("in.json", json);
    let out = bin()
        .arg("minimize")
        .arg(&path)
        .arg("--format")
        .arg("json")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "a b\n");
}

#[test]
fn gen_is_deterministic() {
    let args = [
        "gen", "--functor", "P (A x X)", "--states", "40", "--edges", "120", "--seed", "77",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = bin()
        .args(["gen", "--functor", "P (A x X)", "--states", "40", "--edges", "120", "--seed", "78"])
        .output()
        .unwrap();
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_hits_powerset_budget_exactly() {
    let out = bin()
        .args(["gen", "--functor", "P X", "--states", "100", "--edges", "500", "--seed", "1"])
        .output()
        .unwrap();
    let text = stdout(&out);
    let members: usize = text
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(_, v)| v.matches('q').count())
        .sum();
    assert_eq!(members, 500);
    assert_eq!(text.lines().filter(|l| l.starts_with("state ")).count(), 100);
}

#[test]
fn gen_distributions_reparse() {
    let out = bin()
        .args(["gen", "--functor", "D X", "--states", "30", "--edges", "60", "--seed", "5"])
        .output()
        .unwrap();
    let path = write_temp("gen-dist.txt", &stdout(&out));
    // the parser rejects distributions that do not sum to one
    let run = bin().arg("minimize").arg(&path).arg("--oracle").output().unwrap();
    assert!(run.status.success());
}

#[test]
fn gen_pipes_into_minimize() {
    let gen = bin()
        .args(["gen", "--functor", "P (D (A x X))", "--states", "15", "--edges", "40", "--seed", "9"])
        .output()
        .unwrap();
    let path = write_temp("gen-segala.txt", &stdout(&gen));
    let run = bin()
        .arg("minimize")
        .arg(&path)
        .arg("--oracle")
        .arg("--stats")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));
}

#[test]
fn check_passes_on_shipped_interfaces() {
    let out = bin().args(["check", "--cases", "500"]).output().unwrap();
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("partition structure: ok"));
}

#[test]
fn check_fails_on_broken_interface() {
    let out = bin()
        .args(["check", "--interfaces", "broken", "--cases", "500"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAILED"));
}

#[test]
fn check_with_empty_selection_is_a_usage_error() {
    let out = bin().args(["check", "--interfaces", ""]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
