//! Replays the checked-in fuzz seeds through the fuzz target bodies.

use std::fs;
use std::path::PathBuf;

use jetcalc_cli::{Options, Plan, ProblemFile, Report};
use jetcalc_engine::jetalg::{parse, parse_operator, render, JetSpace};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn space() -> JetSpace {
    JetSpace::simple(&["x", "t"], &["u", "v"], &["sigma"]).unwrap()
}

#[test]
fn expression_seeds_round_trip() {
    let s = space();
    for text in seeds("parse_expr") {
        let e = parse(&text, &s).unwrap();
        assert_eq!(parse(&render(&e, &s), &s).unwrap(), e, "{text}");
    }
}

#[test]
fn operator_seeds_parse() {
    let s = space();
    for text in seeds("parse_operator") {
        parse_operator(&text, &s).unwrap();
    }
}

#[test]
fn problem_seeds_compile() {
    for text in seeds("problem_file") {
        let file = ProblemFile::from_json(&text).unwrap();
        Plan::compile(&file, &Options::default()).unwrap();
    }
}

#[test]
fn report_seeds_round_trip() {
    for text in seeds("report_json") {
        let r: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(r.to_json(), text.trim_end());
    }
}
