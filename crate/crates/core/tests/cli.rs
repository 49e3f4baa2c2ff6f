mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monweaver")).args(args).env_remove("MONWEAVER_SEED").output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_outputs_and_prints_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let input = corpus("counters.imon");
    let o = run(&["synth", path(&input), "--out-dir", path(dir.path()), "--emit", "pseudo-java"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let proto = json(&o);
    assert_eq!(proto["locks"], serde_json::json!(["l1", "l2"]));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[monweaver]"));
    for ext in ["emon", "protocol.json", "java"] {
        assert!(dir.path().join(format!("counters.{ext}")).exists(), "{ext}");
    }
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("counters.protocol.json")).unwrap()).unwrap();
    assert_eq!(saved, proto);
}

#[test]
fn forced_single_lock() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", path(&corpus("counters.imon")), "--out-dir", path(dir.path()), "--max-locks", "1"]);
    let proto = json(&o);
    assert_eq!(proto["locks"], serde_json::json!(["l1"]));
    let single = proto["parallelism"]["disjoint_lock_pairs"].as_u64().unwrap();
    let fine = json(&run(&["synth", path(&corpus("counters.imon")), "--out-dir", path(dir.path())]));
    assert!(single < fine["parallelism"]["disjoint_lock_pairs"].as_u64().unwrap());
}

#[test]
fn wcnf_out_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = dir.path().join("inst-{i}.wcnf");
    let o = run(&["synth", path(&corpus("counters.imon")), "--out-dir", path(dir.path()), "--wcnf-out", path(&pattern), "--weights", "5,3,1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("inst-1.wcnf")).unwrap();
    assert!(text.starts_with("p wcnf"));
    assert!(dir.path().join("inst-1.vars.json").exists());
    let s = run(&["solve", path(&dir.path().join("inst-1.wcnf"))]);
    let out = String::from_utf8_lossy(&s.stdout);
    assert!(out.lines().any(|l| l == "s OPTIMUM FOUND"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("o ")));
    assert!(out.lines().any(|l| l.starts_with("v ")));
    assert_ne!(run(&["synth", path(&corpus("counters.imon")), "--weights", "1,2"]).status.code(), Some(0));
}

#[test]
fn parse_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.imon");
    std::fs::write(&bad, "monitor B {\n  int[0..1] x := 0;\n  m() { x := y; }\n}\n").unwrap();
    let o = run(&["synth", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.imon:3:"));
    assert!(o.stdout.is_empty());
}

#[test]
fn strict_budget_exits_2() {
    let o = run(&["analyze", path(&corpus("queue.imon")), "--state-budget", "10", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", path(&corpus("counters.imon")), "--state-budget", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["budget_exhausted"], true);
}

#[test]
fn solver_timeout_at_first_bound_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("unknown.sh");
    std::fs::write(&script, "echo 's UNKNOWN'\n").unwrap();
    let cmd = format!("sh {}", path(&script));
    let o = run(&["synth", path(&corpus("counters.imon")), "--out-dir", path(dir.path()), "--solver-cmd", &cmd]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_passes_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = corpus("crossing.imon");
    assert_eq!(run(&["synth", path(&input), "--out-dir", path(dir.path())]).status.code(), Some(0));
    let emon = dir.path().join("crossing.emon");
    let work = corpus("crossing.work");
    let o = run(&["check", path(&input), path(&emon), "--work", path(&work)]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["pass"], true);
    assert_eq!(r["lock_order"]["pass"], true);

    let text = std::fs::read_to_string(&emon).unwrap();
    let swapped = text.replacen("    l1.lock();\n    l2.lock();", "    l2.lock();\n    l1.lock();", 1);
    assert_ne!(swapped, text);
    let bad = dir.path().join("swapped.emon");
    std::fs::write(&bad, swapped).unwrap();
    let o = run(&["check", path(&input), path(&bad), "--work", path(&work)]);
    assert_eq!(o.status.code(), Some(5));
    let r = json(&o);
    assert_eq!(r["lock_order"]["pass"], false);
    assert!(r["verdicts"]["deadlock"].as_u64().unwrap() >= 1);
}

#[test]
fn random_check_uses_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let input = corpus("semaphore.imon");
    run(&["synth", path(&input), "--out-dir", path(dir.path())]);
    let emon = dir.path().join("semaphore.emon");
    let work = corpus("semaphore.work");
    let args = ["check", path(&input), path(&emon), "--work", path(&work), "--random", "25"];
    let flag = run(&[&args[..], &["--seed", "17"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_monweaver")).args(args).env("MONWEAVER_SEED", "17").output().unwrap();
    assert_eq!(flag.status.code(), Some(0));
    assert_eq!(json(&flag), json(&env));
}

#[test]
fn analyze_and_fdg_reports() {
    let o = run(&["analyze", path(&corpus("queue.imon"))]);
    let r = json(&o);
    assert!(r["races"].as_array().unwrap().iter().any(|x| x["pair"] == serde_json::json!(["f4", "f8"])));
    assert_eq!(r["fragments"].as_array().unwrap().len(), 8);
    let o = run(&["fdg", path(&corpus("queue.imon")), "--dump"]);
    let r = json(&o);
    assert_eq!(r["edges"].as_array().unwrap().len(), 6);
    assert!(r["dot"].as_str().unwrap().contains("->"));
    let o = run(&["fdg", path(&corpus("queue.imon")), "--signals"]);
    assert_eq!(json(&o)["vertices"].as_array().unwrap().len(), 12);
}

#[test]
fn synth_empty_monitor() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", path(&corpus("empty.imon")), "--out-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["locks"], serde_json::json!([]));
    let text = std::fs::read_to_string(dir.path().join("empty.emon")).unwrap();
    assert!(text.starts_with("monitor Empty"));
}
