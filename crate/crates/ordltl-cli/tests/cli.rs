//! End-to-end tests of the `ordltl` binary: exit codes, output goldens,
//! JSON byte-determinism, and the self-check's failure detection.

use std::io::Write as _;
use std::process::{Command, Output, Stdio};

fn ordltl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordltl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn sat_reports_a_witness_in_text_form() {
    let out = ordltl(&["sat", "p & X q"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with("SAT\n"), "got: {text}");
    assert!(text.contains("witness: "), "got: {text}");
    assert!(text.contains("length: 2"), "got: {text}");
    assert!(text.contains("level: 0"), "got: {text}");
    assert!(text.contains("elapsed: "), "got: {text}");
}

#[test]
fn unsat_reports_the_exhausted_bound() {
    let out = ordltl(&["sat", "p & !p"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.starts_with("UNSAT\n"), "got: {text}");
    assert!(text.contains("no model of length below w^4"), "got: {text}");
}

#[test]
fn sat_json_matches_the_golden_line() {
    let out = ordltl(&["sat", "G X T", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(
        stdout_of(&out),
        concat!(
            r#"{"bound":"w^4","command":"sat","formula":"G X T","length":"w","level":1,"#,
            r#""schemaVersion":1,"stats":{"factCount":4,"stateCount":4},"status":"sat","#,
            r#""witness":{"omega":{"letter":[]}}}"#,
            "\n"
        )
    );
}

#[test]
fn sat_json_output_is_byte_deterministic() {
    let args = ["sat", "G (p -> F q) & F p", "--format", "json"];
    let first = ordltl(&args);
    assert_eq!(first.status.code(), Some(0));
    for _ in 0..2 {
        let again = ordltl(&args);
        assert_eq!(again.stdout, first.stdout);
    }
}

#[test]
fn unsat_json_has_null_witness_fields() {
    let out = ordltl(&["sat", "p & !p", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let line: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid json");
    assert_eq!(line["status"], "unsat");
    assert_eq!(line["witness"], serde_json::Value::Null);
    assert_eq!(line["length"], serde_json::Value::Null);
    assert_eq!(line["level"], serde_json::Value::Null);
}

#[test]
fn parse_errors_exit_with_code_two() {
    let out = ordltl(&["sat", "p U"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        stderr_of(&out),
        "error: parse error at position 4: unexpected end of input\n"
    );
    assert!(stdout_of(&out).is_empty());
}

#[test]
fn an_excessive_level_bound_exits_with_code_three() {
    let out = ordltl(&["sat", "p", "--max-level", "9"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).starts_with("error: "));
}

#[test]
fn a_tiny_state_budget_exits_with_code_three() {
    let out = ordltl(&["sat", "p U (q U (r U s))", "--max-states", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).starts_with("error: "));
}

#[test]
fn witness_out_writes_the_model_as_json() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("witness.json");
    let out = ordltl(&[
        "sat",
        "p & X G q",
        "--witness-out",
        path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let saved = std::fs::read_to_string(&path).expect("witness file exists");
    assert!(saved.ends_with('\n'));
    let word: ordltl::Word = serde_json::from_str(&saved).expect("valid word json");
    let phi = ordltl::Formula::parse("p & X G q").expect("parses");
    assert!(ordltl::eval(&phi, &word));
}

#[test]
fn eval_reads_a_word_file_and_prints_the_verdict() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("word.json");
    std::fs::write(
        &path,
        r#"{"cat":[{"letter":["p"]},{"omega":{"letter":["q"]}}]}"#,
    )
    .expect("write word");
    let path = path.to_str().expect("utf-8 path");

    let holds = ordltl(&["eval", "p & X G q", path]);
    assert_eq!(holds.status.code(), Some(0));
    assert_eq!(stdout_of(&holds), "true\n");

    let fails = ordltl(&["eval", "X X p", path]);
    assert_eq!(fails.status.code(), Some(0));
    assert_eq!(stdout_of(&fails), "false\n");
}

#[test]
fn eval_accepts_the_word_on_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ordltl"))
        .args(["eval", "G p", "-", "--format", "json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .expect("stdin piped")
        .write_all(br#"{"omega":{"letter":["p"]}}"#)
        .expect("write stdin");
    let out = child.wait_with_output().expect("binary exits");
    assert_eq!(out.status.code(), Some(0));
    let line: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid json");
    assert_eq!(line["command"], "eval");
    assert_eq!(line["result"], true);
    assert_eq!(line["length"], "w");
}

#[test]
fn eval_rejects_malformed_word_json() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"cat":[]}"#).expect("write word");
    let out = ordltl(&["eval", "p", path.to_str().expect("utf-8 path")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).starts_with("error: invalid word:"));
}

#[test]
fn dot_matches_the_golden_graph() {
    let out = ordltl(&["dot", "p"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "digraph automaton {\n\
         \x20 rankdir=LR;\n\
         \x20 s0 [label=\"{!p}\", style=bold];\n\
         \x20 s1 [label=\"{p}\", peripheries=2, style=bold];\n\
         \x20 s0 -> s0;\n\
         \x20 s0 -> s1;\n\
         \x20 s1 -> s0;\n\
         \x20 s1 -> s1;\n\
         }\n"
    );
}

#[test]
fn check_passes_cleanly_without_faults() {
    let out = ordltl(&["check", "--cases", "40"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(
        text.contains("differential: 40 cases, 0 failures"),
        "got: {text}"
    );
}

#[test]
fn check_detects_an_injected_limit_rule_fault() {
    let out = ordltl(&[
        "check",
        "--cases",
        "150",
        "--inject-fault",
        "flip-limit-a",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let last = text.lines().last().expect("summary line");
    let summary: serde_json::Value = serde_json::from_str(last).expect("valid json");
    assert!(
        summary["summary"]["failures"].as_u64().expect("a count") >= 1,
        "got: {last}"
    );
}
