use std::io::Write;
use std::process::{Command, Output};

use jetcalc_cli::report::Report;
use jetcalc_cli::schema::Status;

fn jetcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jetcalc")).args(args).output().expect("binary runs")
}

fn run_file(text: &str, extra: &[&str]) -> Output {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    let path = f.path().to_str().unwrap().to_string();
    let mut args = vec!["run", path.as_str()];
    args.extend_from_slice(extra);
    jetcalc(&args)
}

const KDV: &str = r#"{
  "independent": ["x", "t"],
  "dependent": ["u"],
  "equations": [{ "expr": "u[0,1] - 6*u*u[1,0] - u[3,0]", "leading": "u[0,1]" }],
  "covering": { "nonlocal": ["w"], "X": { "x": ["u"], "t": ["3*u^2 + u[2,0]"] } },
  "tasks": [TASKS]
}"#;

fn kdv(tasks: &str) -> String {
    KDV.replace("TASKS", tasks)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn point_symmetries_exit_zero() {
    let o = run_file(&kdv(r#"{"kind":"symmetries","order":1,"degree":2}"#), &["--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Report = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.tasks[0].basis.len(), 2);
}

#[test]
fn broken_covering_exits_one_with_residual() {
    let text = kdv(r#"{"kind":"verify-flat"}"#).replace("3*u^2 + u[2,0]", "3*u^2 + u[2,0] + u");
    let o = run_file(&text, &["--json"]);
    assert_eq!(o.status.code(), Some(1));
    let r: Report = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.tasks[0].status, Status::Fail);
    assert!(!r.tasks[0].residuals.is_empty());
}

#[test]
fn obstruction_exits_one() {
    let task = r#"{"kind":"recursion","operator":{"local":"D[2,0] + 4*u","tail":[{"a":"2*u[1,0]","b":"1"}]},
        "apply":[{"section":"u"}]}"#;
    let o = run_file(&kdv(task), &["--json"]);
    assert_eq!(o.status.code(), Some(1));
    let r: Report = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.tasks[0].outcome, Status::Obstruction);
}

#[test]
fn input_errors_exit_two() {
    let cases = [
        "not json".to_string(),
        kdv(r#"{"kind":"no-such-task"}"#),
        kdv(r#"{"kind":"symmetries","order":1}"#),
        kdv(r#"{"kind":"verify-symmetry","section":"u[1,0"}"#),
        kdv(r#"{"kind":"hamiltonian","operator":[["D[1]","0"]]}"#),
        kdv(r#"{"kind":"currents","from":"missing"}"#),
    ];
    for text in &cases {
        let o = run_file(text, &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(jetcalc(&["run", "/nonexistent/problem.json"]).status.code(), Some(2));
    assert_eq!(jetcalc(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unknown_corpus_lists_names() {
    let o = jetcalc(&["corpus", "unknown"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    for name in jetcalc_cli::corpus::names() {
        assert!(err.contains(name), "{name}");
    }
}

#[test]
fn every_corpus_file_passes() {
    for name in jetcalc_cli::corpus::names() {
        let o = jetcalc(&["corpus", name]);
        assert_eq!(o.status.code(), Some(0), "{name}\n{}", stdout(&o));
    }
}

#[test]
fn emit_round_trips_through_run() {
    let emitted = jetcalc(&["corpus", "heat", "--emit"]);
    assert_eq!(emitted.status.code(), Some(0));
    let text = stdout(&emitted);
    assert_eq!(text.trim_end(), jetcalc_cli::corpus::corpus("heat").unwrap().trim_end());
    let direct = jetcalc(&["corpus", "heat", "--json"]);
    let via_file = run_file(&text, &["--json"]);
    let a: Report = serde_json::from_str(&stdout(&direct)).unwrap();
    let b: Report = serde_json::from_str(&stdout(&via_file)).unwrap();
    assert_eq!(a.tasks, b.tasks);
}

#[test]
fn reports_are_deterministic() {
    for args in [["corpus", "kdv", "--json"], ["corpus", "kdv", "--max-prolong=6"]] {
        let a = jetcalc(&args);
        let b = jetcalc(&args);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn json_and_human_bases_agree() {
    let json = jetcalc(&["corpus", "kdv", "--json"]);
    let human = stdout(&jetcalc(&["corpus", "kdv"]));
    let r: Report = serde_json::from_str(&stdout(&json)).unwrap();
    let mut seen = 0;
    for t in &r.tasks {
        for b in &t.basis {
            let line = match b {
                jetcalc_cli::schema::Section::One(e) => e.clone(),
                jetcalc_cli::schema::Section::Many(v) => format!("({})", v.join(", ")),
            };
            assert!(human.lines().any(|l| l.trim() == line), "{line}");
            seen += 1;
        }
    }
    assert!(seen >= 9);
}

#[test]
fn json_report_round_trips() {
    let text = stdout(&jetcalc(&["corpus", "boussinesq", "--json"]));
    let r: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(r.to_json(), text.trim_end());
    assert_eq!(r.tasks.len(), 8);
    assert!(r.tasks.iter().all(|t| t.elapsed_ms.is_none()));
}

#[test]
fn timing_is_opt_in() {
    let text = stdout(&jetcalc(&["corpus", "wdvv", "--json", "--timing"]));
    let r: Report = serde_json::from_str(&text).unwrap();
    assert!(r.tasks.iter().all(|t| t.elapsed_ms.is_some()));
}
