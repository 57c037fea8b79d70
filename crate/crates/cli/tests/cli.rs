use std::process::Command;

use metric_wb_cli::{run_args, split_universe, EXIT_OK, EXIT_USER};
use serde_json::Value;

fn run(args: &[&str]) -> metric_wb_cli::Outcome {
    run_args(std::iter::once("metric-wb").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.code, EXIT_OK, "{args:?}: {}", out.stderr);
    serde_json::from_str(&out.stdout).unwrap()
}

#[test]
fn check_reports_affinity_errors() {
    let bad = run(&["check", "\\x. x x"]);
    assert_eq!(bad.code, EXIT_USER);
    assert!(bad.stderr.contains("variable x used twice"), "{}", bad.stderr);
    let good = run(&["check", "\\x. x"]);
    assert_eq!(good.code, EXIT_OK);
    assert_eq!(good.stdout, "ok");
}

#[test]
fn check_typed_mode() {
    assert_eq!(run(&["check", "--typed", "(\\p. let <a, b> = p in a) I"]).code, EXIT_USER);
    let ok = run(&["check", "--typed", "let <a, b> = <I, I> in a b"]);
    assert_eq!(ok.code, EXIT_OK);
    assert!(ok.stdout.starts_with("ok: "));
}

#[test]
fn check_reads_files() {
    let dir = std::env::temp_dir().join(format!("metric-wb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("term.txt");
    std::fs::write(&path, "\\f. \\y. f y\n").unwrap();
    let out = run(&["check", "--file", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(run(&["check", "--file", dir.join("missing").to_str().unwrap()]).code, EXIT_USER);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn eval_outputs() {
    let out = run(&["eval", "(\\x.x) (+) omega"]);
    assert_eq!(out.stdout, r#"{"support":[{"elem":"\\x. x","p":"1/2"}],"weight":"1/2"}"#);
    assert_eq!(json(&["eval", "omega"])["weight"], "0/1");
    let v = json(&["eval", "\\x. x"]);
    assert_eq!(v["weight"], "1/1");
    assert_eq!(v["support"].as_array().unwrap().len(), 1);
    assert_eq!(run(&["eval", "x"]).code, EXIT_USER);
    assert_eq!(run(&["eval", "(\\x."]).code, EXIT_USER);
}

#[test]
fn trace_probabilities() {
    assert_eq!(json(&["trace-prob", "I (+) omega", "app(I)"])["probability"], "1/2");
    let clean = json(&["trace-prob", "--tuple", "<\\z. I, \\z. I>", "cut(1);appl(1;;I);appl(2;;I)"]);
    assert_eq!(clean["probability"], "1/1");
    let noisy = json(&[
        "trace-prob",
        "--tuple",
        "<\\z. (I (+) omega), \\z. (I (+) omega)>",
        "cut(1);appl(1;;I);appl(2;;I)",
    ]);
    assert_eq!(noisy["probability"], "1/4");
    assert_eq!(run(&["trace-prob", "I", "app("]).code, EXIT_USER);
}

#[test]
fn distances() {
    let tr = json(&["distance", "--kind", "trace", "I", "omega"]);
    assert_eq!(tr["distance"], "1/1");
    assert_eq!(tr["witness"], "eps");
    assert_eq!(tr["mode"], "lower-bound");

    let b = json(&["distance", "--kind", "bisim", "\\x. (I (+) omega)", "(\\x. I) (+) (\\x. omega)"]);
    assert_eq!(b["distance"], "1/2");
    assert_eq!(b["mode"], "exact-fixpoint");

    let t = json(&[
        "distance",
        "--kind",
        "tuple",
        "--max-len",
        "3",
        "<\\z. (I (+) omega), \\z. (I (+) omega)>",
        "<\\z. I, \\z. I>",
    ]);
    assert_eq!(t["distance"], "3/4");
    assert_eq!(t["witness"], "cut(1);appl(1;;\\x. x);appl(2;;\\x. x)");
}

#[test]
fn distance_flags() {
    let capped = run(&[
        "distance", "--kind", "bisim", "--state-cap", "2", "\\x. (I (+) omega)", "(\\x. I) (+) (\\x. omega)",
    ]);
    assert_eq!(capped.code, EXIT_USER);
    let wide = json(&["distance", "--universe", "I, \\a. omega", "--max-len", "2", "\\x. x", "\\x. I"]);
    assert_eq!(wide["distance"], "1/1");
    assert_eq!(wide["witness"], "app(\\a. omega);app(\\x. x)");
    assert_eq!(run(&["distance", "--universe", "I I", "I", "I"]).code, EXIT_USER);
    assert_eq!(run(&["distance", "--kind", "nope", "I", "I"]).code, EXIT_USER);
}

#[test]
fn universe_splitting_respects_brackets() {
    assert_eq!(split_universe("I, <I, I>, (\\a. a)"), vec!["I", "<I, I>", "(\\a. a)"]);
    assert_eq!(split_universe(" I "), vec!["I"]);
}

#[test]
fn examples_reports() {
    let rows = json(&["examples", "--which", "mn-nn", "--n", "5"]);
    let rows = rows["mn_nn"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[5]["u"], "9765/32768");
    assert_eq!(rows[5]["one_minus_u"], "23003/32768");
    assert!(rows.iter().all(|r| r["holds"] == true));

    let ex = json(&["examples", "--which", "expair"]);
    assert_eq!(ex["expair"]["distance"], "3/4");
    assert_eq!(ex["expair"]["pr_noisy"], "1/4");

    let all = json(&["examples", "--n", "2"]);
    assert!(all.get("expair").is_some() && all.get("mn_nn").is_some());
}

#[test]
fn binary_exit_codes_and_stable_output() {
    let bin = env!("CARGO_BIN_EXE_metric-wb");
    let go = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let bad = go(&["check", "\\x. x x"]);
    assert_eq!(bad.status.code(), Some(1));
    let usage = go(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(1));
    let help = go(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let a = go(&["distance", "--kind", "bisim", "\\x. (I (+) omega)", "(\\x. I) (+) (\\x. omega)"]);
    let b = go(&["distance", "--kind", "bisim", "\\x. (I (+) omega)", "(\\x. I) (+) (\\x. omega)"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().ends_with("}\n"));
}
