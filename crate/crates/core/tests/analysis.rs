mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::OnceLock;

use common::*;
use monweaver::analysis::{analyze, atomic_eligible, find_safe_interleavings, reachable_states, AnalysisConfig, AnalysisResults};
use monweaver::exec::Program;
use monweaver::fdg::{build_cfg, build_fdg, construct, Fdg, PartitionMode};
use monweaver::frontend::{load, MonitorAst};

struct Queue {
    ast: MonitorAst,
    fdg: Fdg,
    res: AnalysisResults,
}

fn queue() -> &'static Queue {
    static Q: OnceLock<Queue> = OnceLock::new();
    Q.get_or_init(|| {
        let ast = load(&read_corpus("queue.imon")).unwrap();
        let fdg = construct(&ast, PartitionMode::Paper).unwrap();
        let res = analyze(&ast, &fdg, &AnalysisConfig::default());
        Queue { ast, fdg, res }
    })
}

/// Fragment index from its 1-based display number.
fn f(n: usize) -> usize {
    n - 1
}

#[test]
fn commutativity_ground_truth() {
    let q = &queue().res;
    assert!(q.left_commutes(f(4), f(5)));
    assert!(!q.left_commutes(f(4), f(1)));
    for w in 6..=8 {
        assert!(q.right_commutes(f(4), f(w)), "f4 right-commutes with f{w}");
    }
    assert!(q.left_commutes(f(1), f(1)), "read-only fragment commutes with itself");
}

#[test]
fn right_commute_f4_f1_holds_on_reachable_states() {
    // Running f1 then f4 from any reachable state never differs from f4 then f1.
    assert!(queue().res.right_commutes(f(4), f(1)));
}

#[test]
fn count_race_and_refined_cells() {
    let q = queue();
    let race = q.res.races.get(f(4), f(8)).unwrap();
    assert_eq!(race.iter().map(|p| p.to_string()).collect::<Vec<_>>(), ["count"]);
    assert!(q.res.races.get(f(2), f(6)).is_none());
    assert!(q.res.races.refined.contains(&(f(2), f(6))));
    assert!(q.res.races.get(f(1), f(5)).is_none(), "two guards only read");
    let pairs: BTreeSet<(usize, usize)> = q.res.races.races.keys().filter(|(a, b)| a <= b).map(|(a, b)| (a + 1, b + 1)).collect();
    let frozen: BTreeSet<(usize, usize)> =
        [(1, 4), (1, 8), (2, 2), (2, 3), (3, 3), (4, 4), (4, 5), (4, 8), (5, 8), (6, 6), (6, 7), (7, 7), (8, 8)].into_iter().collect();
    assert_eq!(pairs, frozen);
}

#[test]
fn atomic_candidates() {
    let q = queue();
    assert_eq!(q.res.atomics.iter().collect::<Vec<_>>(), ["count"]);
    let ast = load("monitor M { int[0..3] a := 0; int[0..3] b := 0; int[0..3] never := 0; m(int[0..1] k) { a := a - k; b := (b + 1) % 4; } }").unwrap();
    assert_eq!(atomic_eligible(&ast).into_iter().collect::<Vec<_>>(), ["a", "never"]);
}

#[test]
fn safe_interleavings_are_exactly_cross_method() {
    let q = queue();
    let mut expected = BTreeSet::new();
    for v in 0..q.fdg.len() {
        for &(s, t) in &q.fdg.edges {
            if !q.fdg.same_method(v, s) {
                expected.insert((v, (s, t)));
            }
        }
    }
    assert_eq!(expected.len(), 24);
    assert_eq!(q.res.safe, expected);
}

#[test]
fn no_interleavings_without_edges() {
    let ast = load("monitor M { int[0..1] x := 0; m() { x := 1; } }").unwrap();
    let cfg = build_cfg(&ast.methods[0]).unwrap();
    let whole: Vec<usize> = (0..cfg.len()).collect();
    let fdg = build_fdg(vec![cfg], vec![vec![whole]]).unwrap();
    assert_eq!((fdg.len(), fdg.edges.len()), (1, 0));
    assert!(find_safe_interleavings(&fdg, |_, _| true).is_empty());
}

/// Sequentially reachable queue states by direct simulation of put/take.
fn queue_oracle() -> usize {
    let start = ([0i64; 3], 0usize, 0usize, 0usize);
    let mut seen = HashSet::from([start]);
    let mut todo = VecDeque::from([start]);
    while let Some((q, first, last, count)) = todo.pop_front() {
        let mut next = Vec::new();
        if count < 3 {
            for o in 0..=9 {
                let mut q2 = q;
                q2[last] = o;
                next.push((q2, first, (last + 1) % 3, count + 1));
            }
        }
        if count > 0 {
            let mut q2 = q;
            q2[first] = 0;
            next.push((q2, (first + 1) % 3, last, count - 1));
        }
        for s in next {
            if seen.insert(s) {
                todo.push_back(s);
            }
        }
    }
    seen.len()
}

#[test]
fn reachable_queue_states_match_oracle() {
    let q = queue();
    let prog = Program::new(&q.ast, &q.fdg.cfgs);
    let states = reachable_states(&prog, 1_000_000).unwrap();
    assert_eq!(states.len(), queue_oracle());
    assert_eq!(states.len(), 3333);
    assert_eq!(q.res.states, Some(3333));
    assert!(reachable_states(&prog, 100).is_none(), "budget exhaustion reports None");
}

#[test]
fn tiny_budget_is_conservative() {
    let q = queue();
    let res = analyze(&q.ast, &q.fdg, &AnalysisConfig { budget: 10, ..Default::default() });
    assert!(res.budget_exhausted());
    assert!(res.safe.is_subset(&q.res.safe));
    assert!(res.races.get(f(2), f(6)).is_some(), "unrefined overlap stays a race");
}
