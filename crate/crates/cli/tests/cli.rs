//! End-to-end tests of the binary: pipelines, output formats, exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_knnportfolio");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary must run")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_toy_cnfs(dir: &Path) {
    fs::write(dir.join("a.cnf"), "p cnf 3 2\n1 -2 0\n2 3 -1 0\n").unwrap();
    fs::write(
        dir.join("b.cnf"),
        "p cnf 5 4\n1 2 3 0\n-1 -2 0\n4 5 0\n-3 -4 -5 0\n",
    )
    .unwrap();
    fs::write(dir.join("c.cnf"), "p cnf 2 2\n1 2 0\n-1 -2 0\n").unwrap();
}

/// Trains a knowledge base over the three toy instances and returns its path.
fn train_kb(dir: &Path, rows: &str) -> PathBuf {
    write_toy_cnfs(dir);
    let table = dir.join("table.csv");
    fs::write(&table, format!("instance,category,alpha,beta\n{rows}")).unwrap();
    let kb = dir.join("train.kb");
    let output = run(&[
        "train",
        "--table",
        table.to_str().unwrap(),
        "--cnf-dir",
        dir.to_str().unwrap(),
        "--cutoff",
        "1500",
        "--out",
        kb.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    kb
}

fn write_stub(dir: &Path, name: &str, body: &str) -> String {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    let mut perms = fs::metadata(&path).unwrap().permissions();
    perms.set_mode(0o755);
    fs::set_permissions(&path, perms).unwrap();
    path.display().to_string()
}

#[test]
fn features_listing_and_machine_row() {
    let dir = TempDir::new().unwrap();
    write_toy_cnfs(dir.path());
    let cnf = dir.path().join("a.cnf");

    let output = run(&["features", cnf.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let out = stdout(&output);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 29);
    assert_eq!(lines[0], "1\tnum_clauses\t2");
    assert_eq!(lines[2], "3\tvars_per_clause\t1.5");
    assert_eq!(lines[23], "24\thorn_clause_fraction\t0.5");

    let output = run(&["features", cnf.to_str().unwrap(), "--time"]);
    let out = stdout(&output);
    assert_eq!(out.lines().count(), 30);
    let time_line = out.lines().last().unwrap();
    assert!(time_line.starts_with("time\textraction_seconds\t"));
    let seconds: f64 = time_line.rsplit('\t').next().unwrap().parse().unwrap();
    assert!(seconds >= 0.0);

    let output = run(&["features", cnf.to_str().unwrap(), "--machine"]);
    let out = stdout(&output);
    assert_eq!(out.lines().count(), 1);
    let fields: Vec<&str> = out.trim_end().split(',').collect();
    assert_eq!(fields.len(), 29);
    assert_eq!(fields[0], "2");
    assert_eq!(fields[2], "1.5");
}

#[test]
fn parse_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.cnf");
    fs::write(&empty, "").unwrap();
    let output = run(&["features", empty.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("problem line"));

    let missing = dir.path().join("missing.cnf");
    let output = run(&["features", missing.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn train_reports_dropped_rows() {
    let dir = TempDir::new().unwrap();
    write_toy_cnfs(dir.path());
    let table = dir.path().join("table.csv");
    // b.cnf is unsolvable, c.cnf appears twice.
    fs::write(
        &table,
        "instance,category,alpha,beta\n\
         a.cnf,random,10,T\n\
         b.cnf,crafted,T,T\n\
         c.cnf,industrial,T,5\n\
         c.cnf,industrial,1,1\n",
    )
    .unwrap();
    let kb = dir.path().join("out.kb");
    let output = run(&[
        "train",
        "--table",
        table.to_str().unwrap(),
        "--cnf-dir",
        dir.path().to_str().unwrap(),
        "--cutoff",
        "1500",
        "--out",
        kb.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let err = stderr(&output);
    assert!(err.contains("not solved by any solver"), "{err}");
    assert!(err.contains("duplicate instance id"), "{err}");
    assert!(err.contains("2 rows dropped"), "{err}");

    let content = fs::read_to_string(&kb).unwrap();
    assert!(content.starts_with("#knnportfolio-kb v1 cutoff=1500\n"));
    assert_eq!(content.lines().filter(|l| !l.starts_with('#')).count(), 3); // header + 2 records
}

#[test]
fn select_prints_solver_and_trace() {
    let dir = TempDir::new().unwrap();
    let kb = train_kb(
        dir.path(),
        "a.cnf,random,10,T\nb.cnf,crafted,20,T\nc.cnf,industrial,T,5\n",
    );
    let cnf = dir.path().join("a.cnf");
    let output = run(&[
        "select",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "-k",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output).lines().next(), Some("alpha"));
    let trace = stderr(&output);
    assert!(trace.contains("neighbors (k=2, distance=argosmart):"), "{trace}");
    assert!(trace.contains("a.cnf\tdistance=0"), "{trace}");
    assert!(trace.contains("global tiebreak used: no"), "{trace}");

    // k larger than the knowledge base is a usage error.
    let output = run(&[
        "select",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "-k",
        "9",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("k must be between"));
}

#[test]
fn select_trace_shows_global_tiebreak() {
    let dir = TempDir::new().unwrap();
    // Identical outcomes on the two nearest records; alpha wins on the
    // full training set.
    let kb = train_kb(
        dir.path(),
        "a.cnf,random,10,10\nb.cnf,crafted,20,20\nc.cnf,industrial,5,T\n",
    );
    let cnf = dir.path().join("a.cnf");
    let output = run(&[
        "select",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "-k",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output).lines().next(), Some("alpha"));
    let trace = stderr(&output);
    assert!(trace.contains("tied on neighborhood: alpha, beta"), "{trace}");
    assert!(trace.contains("global tiebreak used: yes"), "{trace}");
}

#[test]
fn solve_exit_codes_follow_the_answer() {
    let dir = TempDir::new().unwrap();
    let kb = train_kb(
        dir.path(),
        "a.cnf,random,10,T\nb.cnf,crafted,20,T\nc.cnf,industrial,T,5\n",
    );
    let cnf = dir.path().join("a.cnf");
    let sat = write_stub(dir.path(), "sat.sh", "exit 10");
    let unsat = write_stub(dir.path(), "unsat.sh", "exit 20");
    let hang = write_stub(dir.path(), "hang.sh", "sleep 30");

    // Default manifest path: <kb>.solvers.
    let manifest = PathBuf::from(format!("{}.solvers", kb.display()));
    fs::write(&manifest, format!("alpha\t{sat} {{cnf}}\nbeta\t{sat} {{cnf}}\n")).unwrap();
    let output = run(&[
        "solve",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "-k",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(10), "{}", stderr(&output));
    let report = stdout(&output);
    assert!(report.contains("chosen solver: alpha"), "{report}");
    assert!(report.contains("answer: SAT"), "{report}");

    fs::write(&manifest, format!("alpha\t{unsat} {{cnf}}\nbeta\t{unsat} {{cnf}}\n")).unwrap();
    let output = run(&[
        "solve",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "-k",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(20));
    assert!(stdout(&output).contains("answer: UNSAT"));

    // Timeout: unknown answer, exit 0.
    fs::write(&manifest, format!("alpha\t{hang} {{cnf}}\nbeta\t{sat} {{cnf}}\n")).unwrap();
    let output = run(&[
        "solve",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "-k",
        "2",
        "--cutoff",
        "0.5",
        "--fallback",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let report = stdout(&output);
    assert!(report.contains("timeout"), "{report}");
    assert!(report.contains("answer: UNKNOWN"), "{report}");
    // The cutoff budget is spent: no fallback after a timeout.
    assert!(!report.contains("attempt 2"), "{report}");
}

#[test]
fn solve_fallback_and_failure_exit_codes() {
    let dir = TempDir::new().unwrap();
    let kb = train_kb(
        dir.path(),
        "a.cnf,random,10,T\nb.cnf,crafted,20,T\nc.cnf,industrial,T,5\n",
    );
    let cnf = dir.path().join("a.cnf");
    let sat = write_stub(dir.path(), "sat.sh", "exit 10");
    let crash = write_stub(dir.path(), "crash.sh", "exit 3");
    let manifest = dir.path().join("solvers.tsv");

    // Crash, then fallback succeeds with the second-ranked solver.
    fs::write(&manifest, format!("alpha\t{crash} {{cnf}}\nbeta\t{sat} {{cnf}}\n")).unwrap();
    let output = run(&[
        "solve",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "-k",
        "2",
        "--fallback",
    ]);
    assert_eq!(output.status.code(), Some(10), "{}", stderr(&output));
    let report = stdout(&output);
    assert!(report.contains("attempt 1: alpha -> failed"), "{report}");
    assert!(report.contains("attempt 2: beta -> solved"), "{report}");

    // Crash without fallback: runtime failure.
    let output = run(&[
        "solve",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "-k",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(1));

    // Everything crashes with fallback: runtime failure.
    fs::write(&manifest, format!("alpha\t{crash} {{cnf}}\nbeta\t{crash} {{cnf}}\n")).unwrap();
    let output = run(&[
        "solve",
        cnf.to_str().unwrap(),
        "--kb",
        kb.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "-k",
        "2",
        "--fallback",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("all 2 solvers failed"));
}

#[test]
fn evaluate_emits_report_and_sweep() {
    let dir = TempDir::new().unwrap();
    // alpha dominates everywhere: the sweep is flat.
    let kb = train_kb(
        dir.path(),
        "a.cnf,random,1,T\nb.cnf,crafted,2,T\nc.cnf,industrial,3,T\n",
    );
    let csv = dir.path().join("report.csv");
    let sweep = dir.path().join("sweep.csv");
    let output = run(&[
        "evaluate",
        "--kb",
        kb.to_str().unwrap(),
        "--k-range",
        "1..2",
        "--distances",
        "argosmart,euclidean",
        "--csv",
        csv.to_str().unwrap(),
        "--sweep-csv",
        sweep.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let table = stdout(&output);
    assert!(table.contains("policy"), "{table}");
    assert!(table.contains("vbs"), "{table}");

    let sweep_text = fs::read_to_string(&sweep).unwrap();
    let mut lines = sweep_text.lines();
    assert_eq!(lines.next(), Some("distance,k,solved"));
    let counts: Vec<&str> = lines.collect();
    assert_eq!(counts.len(), 4);
    assert!(counts.iter().all(|line| line.ends_with(",3")), "{sweep_text}");

    let report_text = fs::read_to_string(&csv).unwrap();
    assert!(report_text.starts_with("policy,solved_total"));
    assert!(report_text.lines().last().unwrap().starts_with("vbs,"));

    // k beyond the leave-one-out bound is a usage error.
    let output = run(&["evaluate", "--kb", kb.to_str().unwrap(), "-k", "3"]);
    assert_eq!(output.status.code(), Some(2));
}
