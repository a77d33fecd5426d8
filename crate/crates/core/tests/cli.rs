mod common;

use std::fs;
use std::process::{Command, Output};

use common::*;

fn cdiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdiag")).args(args).output().unwrap()
}

fn path(name: &str, ext: &str) -> String {
    corpus_dir().join(format!("{name}.{ext}")).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(file: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("cdiag-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(file)
}

#[test]
fn analyze_exit_codes_over_the_corpus() {
    for name in CORPUS {
        let o = cdiag(&["analyze", &path(name, "cdsl")]);
        let want = if name == "selection_a" { 0 } else { 1 };
        assert_eq!(o.status.code(), Some(want), "{name}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["schema_version"], "1");
    }
}

#[test]
fn analyze_markdown_has_six_steps_and_a_dot_block() {
    let o = cdiag(&["analyze", &path("brain_tumour", "cdsl"), "--format", "markdown"]);
    let md = stdout(&o);
    for step in 1..=6 {
        assert!(md.contains(&format!("\n## {step}. ")), "step {step} missing");
    }
    assert!(md.contains("```dot\ndigraph \"brain_tumour\""));
}

#[test]
fn parse_errors_exit_2_with_location() {
    let f = scratch("broken.cdsl");
    fs::write(&f, "diagram \"x\" {\n  node A\n  edge A => B\n}\n").unwrap();
    let o = cdiag(&["analyze", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = stderr(&o);
    assert!(err.contains("broken.cdsl:3:"), "{err}");
}

#[test]
fn strict_and_lenient_domain_rule() {
    let f = scratch("domain_child.cdsl");
    fs::write(
        &f,
        "diagram \"dc\" {\n  node A\n  node D kind=domain\n  node X role=image\n  node Y role=target\n\
         edge A -> D\n  edge D -> X\n  edge X -> Y\n}\n",
    )
    .unwrap();
    let f = f.to_str().unwrap();
    assert_eq!(cdiag(&["analyze", f]).status.code(), Some(2));
    assert_eq!(cdiag(&["analyze", f, "--lenient"]).status.code(), Some(1));
}

#[test]
fn missing_roles_are_input_errors() {
    let f = scratch("noroles.cdsl");
    fs::write(&f, "diagram \"n\" {\n  node A\n  node B\n  edge A -> B\n}\n").unwrap();
    let o = cdiag(&["analyze", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MISSING_ROLE"));
    // graph queries do not need roles
    assert_eq!(cdiag(&["dsep", f.to_str().unwrap(), "--a", "A", "--b", "B"]).status.code(), Some(0));
}

#[test]
fn dsep_reports_witness_paths() {
    let o = cdiag(&["dsep", &path("selection_d", "cdsl"), "--a", "X", "--b", "Y", "--given", "S"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "connected\n  open path: X -> S <- Y\n");
    let o = cdiag(&["dsep", &path("selection_d", "cdsl"), "--a", "X", "--b", "Y"]);
    assert_eq!(stdout(&o), "separated\n");
    let o = cdiag(&["dsep", &path("selection_d", "cdsl"), "--a", "X", "--b", "Q"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('Q'));
}

#[test]
fn simulate_is_deterministic_and_writes_csv() {
    let out = scratch("sim.csv");
    let args = |seed: &str| {
        vec![
            "simulate".to_string(),
            path("shift_d", "cdsl"),
            "--cpts".into(),
            path("shift_d", "cpt"),
            "--samples".into(),
            "500".into(),
            "--seed".into(),
            seed.into(),
        ]
    };
    let a: Vec<String> = args("3");
    let a: Vec<&str> = a.iter().map(String::as_str).collect();
    let first = cdiag(&a);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&cdiag(&a)));
    let csv = stdout(&first);
    assert_eq!(csv.lines().count(), 501);
    assert_eq!(csv.lines().next(), Some("D,Y,Z,X"));

    let mut with_out = a.clone();
    with_out.extend(["--out", out.to_str().unwrap()]);
    let o = cdiag(&with_out);
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(&out).unwrap(), csv);

    let mut ev = a.clone();
    ev.extend(["--evidence", "D=test"]);
    let csv = stdout(&cdiag(&ev));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("test,")));
}

#[test]
fn simulate_rejects_bad_evidence() {
    let base = [
        "simulate",
        &path("selection_d", "cdsl"),
        "--cpts",
        &path("selection_d", "cpt"),
        "--samples",
        "10",
        "--seed",
        "1",
    ]
    .map(String::from);
    for (ev, needle) in [
        ("X", "node=state"),
        ("X=2", "UNKNOWN_STATE"),
        ("X=0,Y=0,S=in", "ZERO_PROBABILITY_EVIDENCE"),
    ] {
        let mut args: Vec<&str> = base.iter().map(String::as_str).collect();
        args.extend(["--evidence", ev]);
        let o = cdiag(&args);
        assert_eq!(o.status.code(), Some(2), "{ev}");
        assert!(stderr(&o).contains(needle), "{ev}: {}", stderr(&o));
    }
}

#[test]
fn verify_exit_codes() {
    let o = cdiag(&["verify", &path("shift_d", "cdsl"), "--cpts", &path("shift_d", "cpt")]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verification"]["passed"], true);

    let o = cdiag(&["verify", &path("selection_a", "cdsl"), "--cpts", &path("selection_a", "cpt")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // a model for a different diagram
    let o = cdiag(&["verify", &path("shift_d", "cdsl"), "--cpts", &path("shift_a", "cpt")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MODEL_DIAGRAM_MISMATCH"));

    let o = cdiag(&["verify", &path("shift_d", "cdsl"), "--cpts", &path("shift_d", "cpt"), "--delta", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_dot_and_independencies() {
    let o = cdiag(&["export-dot", &path("shift_c", "cdsl")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("digraph \"shift_c\" {\n"));

    // chain Z -> X -> Y plus D -> Y
    let o = cdiag(&["independencies", &path("shift_c", "cdsl"), "--max-cond", "1"]);
    let lines = stdout(&o);
    assert!(lines.lines().any(|l| l == "D _||_ X | {}"), "{lines}");
    assert!(lines.lines().any(|l| l == "D _||_ Z | {}"), "{lines}");
}

#[test]
fn help_and_version() {
    let o = cdiag(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate"));
    let o = cdiag(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("cdiag "));
    let o = cdiag(&["analyze"]);
    assert_eq!(o.status.code(), Some(2));
}
