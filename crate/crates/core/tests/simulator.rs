mod common;

use common::*;
use monweaver::cli::{synth, Opts};
use monweaver::codegen::{parse_explicit, EStmt, ExplicitMonitor};
use monweaver::frontend::load;
use monweaver::simulator::{check_correctness, explore, Harness, Implicit, ImplicitEnd, Machine, Mode, Outcome, Workload};

fn workload(json: &str) -> Workload {
    Workload::parse(json).unwrap()
}

fn machine(src: &str, threads: &[&[&str]]) -> Machine {
    let em = parse_explicit(src).unwrap();
    let mut m = Machine::new(&em).unwrap();
    let ops: Vec<Vec<(String, Vec<i64>)>> = threads.iter().map(|t| t.iter().map(|o| (o.to_string(), vec![])).collect()).collect();
    m.set_workload(&ops).unwrap();
    m
}

fn synthesized(name: &str, opts: &Opts) -> (monweaver::frontend::MonitorAst, ExplicitMonitor) {
    let ast = load(&read_corpus(&format!("{name}.imon"))).unwrap();
    let out = synth(&ast, opts).unwrap();
    (ast, parse_explicit(&out.text).unwrap())
}

#[test]
fn counters_concretization() {
    let (ast, em) = synthesized("counters", &Opts::default());
    let w = workload(r#"{"threads": [[{"method": "foo"}], [{"method": "bar"}]]}"#);
    let h = Harness::new(&ast, &em, &w).unwrap();
    let (trace, st) = h.concretize(&[(0, 0), (1, 0)]).unwrap();
    let text: Vec<String> = trace.iter().map(|e| h.machine.statement(e)).collect();
    assert_eq!(
        text,
        [
            "t0: foo l1.lock();",
            "t0: foo x := (x + 1) % 4;",
            "t0: foo y := (y + 1) % 4;",
            "t0: foo l1.unlock();",
            "t1: bar l2.lock();",
            "t1: bar z := (z + 1) % 4;",
            "t1: bar l2.unlock();",
        ]
    );
    assert_eq!(h.machine.terminal(&st), Some(Outcome::Final));
    assert!(h.concretize(&[]).unwrap().0.is_empty());
}

#[test]
fn interleaved_disjoint_locks_reach_the_sequential_state() {
    let (ast, em) = synthesized("counters", &Opts::default());
    let w = workload(r#"{"threads": [[{"method": "foo"}], [{"method": "bar"}]]}"#);
    let r = check_correctness(&ast, &em, &w).unwrap();
    assert!(r.pass);
    assert_eq!(r.final_states.len(), 1);
    assert_eq!(r.final_states[0]["fields"], serde_json::json!({"x": 1, "y": 1, "z": 1}));
}

#[test]
fn inverted_acquisition_deadlocks() {
    let m = machine(
        "monitor D { lock l1; lock l2; int[0..1] x := 0;
           a() { l1.lock(); l2.lock(); x := 1; l2.unlock(); l1.unlock(); }
           b() { l2.lock(); l1.lock(); x := 0; l1.unlock(); l2.unlock(); } }",
        &[&["a"], &["b"]],
    );
    let ex = explore(&m, &m.start(&[0]), 100_000);
    assert!(ex.counts.deadlock >= 1);
    let cycle = ex.failures.iter().find_map(|w| match &w.outcome {
        Outcome::Deadlock { cycle } => Some(cycle.clone()),
        _ => None,
    });
    assert_eq!(cycle.unwrap().len(), 2);
    assert!(ex.counts.finals >= 1, "other schedules still finish");
}

#[test]
fn await_without_signal_is_stuck() {
    let m = machine(
        "monitor S { lock l1; int[0..1] x := 0; condvar cv1 on l1 when x == 0;
           w() { l1.lock(); cv1.await(); l1.unlock(); } }",
        &[&["w"]],
    );
    let ex = explore(&m, &m.start(&[0]), 1000);
    assert_eq!(ex.counts.finals, 0);
    assert!(ex.counts.stuck >= 1);
}

#[test]
fn await_on_false_condition_is_blocked() {
    let m = machine(
        "monitor S { lock l1; int[0..1] x := 0; condvar cv1 on l1 when x == 1;
           w() { l1.lock(); cv1.await(); l1.unlock(); } }",
        &[&["w"]],
    );
    let ex = explore(&m, &m.start(&[0]), 1000);
    assert_eq!((ex.counts.blocked, ex.counts.stuck, ex.counts.deadlock), (1, 0, 0));
}

#[test]
fn finishing_with_a_lock_held_is_stuck() {
    let m = machine("monitor S { lock l1; m() { l1.lock(); } }", &[&["m"]]);
    let ex = explore(&m, &m.start(&[]), 1000);
    assert_eq!(ex.counts.stuck, 1);
}

#[test]
fn implicit_take_semantics() {
    let ast = load(&read_corpus("queue.imon")).unwrap();
    let imp = Implicit::new(&ast).unwrap();
    let w = workload(r#"{"threads": [[{"method": "take"}]], "init": {"queue": [7, 0, 0], "count": 1, "last": 1}}"#);
    let ops = imp.bind(&w).unwrap();
    let init = imp.initial(&w).unwrap();
    match imp.run(&ops, &init, &[(0, 0)]) {
        ImplicitEnd::Done { state } => {
            assert_eq!(state.results[0][0][0], 7, "r holds the dequeued head");
            let fields = imp.prog.layout.to_json(&state.fields);
            assert_eq!(fields["count"], 0);
            assert_eq!(fields["first"], 1);
        }
        other => panic!("{other:?}"),
    }
    let empty = workload(r#"{"threads": [[{"method": "take"}]]}"#);
    let ops = imp.bind(&empty).unwrap();
    let init = imp.initial(&empty).unwrap();
    assert!(matches!(imp.run(&ops, &init, &[(0, 0)]), ImplicitEnd::Blocked { .. }));
    assert!(matches!(imp.run(&ops, &init, &[]), ImplicitEnd::Done { .. } | ImplicitEnd::Blocked { .. }));
}

#[test]
fn queue_put_take_with_one_slot_left() {
    let (ast, em) = synthesized("queue", &Opts::default());
    let w = workload(
        r#"{"threads": [[{"method": "put", "args": [5]}], [{"method": "take"}]], "init": {"count": 2, "queue": [1, 2, 0], "last": 2}}"#,
    );
    let r = check_correctness(&ast, &em, &w).unwrap();
    assert!(r.pass, "{}", serde_json::to_string_pretty(&r).unwrap());
    assert_eq!((r.verdicts.stuck, r.verdicts.deadlock), (0, 0));
}

#[test]
fn global_lock_output_has_same_finals() {
    let w = workload(&read_corpus("crossing.work"));
    let (ast, fine) = synthesized("crossing", &Opts::default());
    let (_, coarse) = synthesized("crossing", &Opts { max_locks: Some(1), ..Opts::default() });
    let a = check_correctness(&ast, &fine, &w).unwrap();
    let b = check_correctness(&ast, &coarse, &w).unwrap();
    assert!(a.pass && b.pass);
    assert_eq!(a.final_states, b.final_states);
}

#[test]
fn removed_acquisition_breaks_condition_two() {
    let ast = load("monitor R { int[0..2] n := 0; inc() { t := n; n := t + 1; } }").unwrap();
    let locked = parse_explicit("monitor R { lock l1; int[0..2] n := 0; inc() { l1.lock(); t := n; n := t + 1; l1.unlock(); } }").unwrap();
    let w = workload(r#"{"threads": [[{"method": "inc"}], [{"method": "inc"}]]}"#);
    assert!(check_correctness(&ast, &locked, &w).unwrap().pass);
    let mut broken = locked.clone();
    broken.methods[0].body.retain(|s| !matches!(s, EStmt::Lock(_) | EStmt::Unlock(_)));
    let r = check_correctness(&ast, &broken, &w).unwrap();
    assert!(r.sequential.pass);
    assert!(!r.interleaved.pass);
    assert_eq!(r.interleaved.counterexamples[0].explicit.len(), 4);
}

#[test]
fn single_thread_matches_sequential_run() {
    let (ast, em) = synthesized("semaphore", &Opts::default());
    let w = workload(r#"{"threads": [[{"method": "acquire"}, {"method": "release"}]]}"#);
    let r = check_correctness(&ast, &em, &w).unwrap();
    assert!(r.pass);
    assert_eq!(r.implicit.histories, 1);
    assert_eq!(r.final_states.len(), 1);
}

#[test]
fn empty_workload_passes() {
    let (ast, em) = synthesized("semaphore", &Opts::default());
    let r = check_correctness(&ast, &em, &workload(r#"{"threads": []}"#)).unwrap();
    assert!(r.pass);
}

#[test]
fn random_mode_is_reproducible() {
    let (ast, em) = synthesized("semaphore", &Opts::default());
    let mut w = workload(&read_corpus("semaphore.work"));
    w.mode = Mode::Random { runs: 50, seed: Some(9) };
    let h = Harness::new(&ast, &em, &w).unwrap();
    let a = h.check(10_000);
    let b = h.check(10_000);
    assert!(a.pass);
    assert_eq!(a.final_states, b.final_states);
}
