mod common;

use common::*;
use monweaver::maxsat::{compute_max_locks, encode, parse_model, solve, synthesize, Problem, Race, Status, SynthOptions, Wcnf, Weights};

const FROZEN_COSTS: [u64; 50] = [
    58, 8, 20, 24, 4, 28, 2, 6, 28, 72, 16, 4, 40, 24, 22, 42, 4, 20, 2, 84, 8, 92, 0, 4, 0, 8, 8, 10, 4, 52, 44, 4, 16, 4, 4, 0, 0, 2, 34, 10,
    12, 4, 68, 48, 4, 6, 2, 64, 16, 2,
];

#[test]
fn embedded_solver_matches_enumeration() {
    let wt = Weights::default();
    let mut r = rng(7);
    for (i, frozen) in FROZEN_COSTS.iter().enumerate() {
        let p = random_problem(&mut r);
        let locks = (p.len() % 3) + 1;
        let enc = encode(&p, locks, &wt);
        let out = solve(&enc.wcnf, None, 0);
        assert_eq!(out.status, Status::Optimal, "instance {i}");
        assert!(enc.wcnf.hard_ok(&out.model), "instance {i}");
        assert_eq!(out.cost, *frozen, "instance {i}: solver");
        assert_eq!(brute_force_objective(&p, locks, &wt), *frozen, "instance {i}: enumeration");
    }
}

#[test]
fn graph_classes_up_to_six_vertices() {
    let counts: Vec<usize> = (1..=6).map(|n| nonisomorphic(n).len()).collect();
    assert_eq!(counts, [1, 2, 4, 11, 34, 156]);
}

#[test]
fn min_lock_count_is_edge_clique_cover() {
    let mut hist = [0usize; 10];
    for n in 1..=6 {
        for g in nonisomorphic(n) {
            let ecc = min_edge_clique_cover(&g);
            hist[ecc] += 1;
            let p = race_only(&g);
            let upper = compute_max_locks(&p);
            assert!(upper >= ecc.max(1), "{g:?}: bound {upper} < cover {ecc}");
            assert_eq!(solver_min_locks(&p, upper), Some(ecc), "{g:?}");
        }
    }
    assert_eq!(hist, [6, 15, 31, 48, 54, 32, 15, 4, 2, 1]);
}

fn graph_problem(n: usize, edges: &[(usize, usize)]) -> Problem {
    Problem {
        names: (1..=n).map(|i| format!("f{i}")).collect(),
        method_of: (0..n).collect(),
        methods: n,
        wait_pred: vec![None; n],
        races: edges.iter().map(|&(a, b)| Race { a, b, atomic: None }).collect(),
        ..Default::default()
    }
}

#[test]
fn lock_bound_examples() {
    assert_eq!(compute_max_locks(&graph_problem(3, &[])), 1);
    assert_eq!(compute_max_locks(&graph_problem(3, &[(0, 1), (1, 2), (0, 2)])), 2);
    assert_eq!(compute_max_locks(&graph_problem(3, &[(0, 1), (1, 2)])), 2);
    assert_eq!(compute_max_locks(&graph_problem(6, &[(0, 1), (2, 3), (4, 5)])), 3);
}

#[test]
fn single_method_stops_after_one_bound() {
    let mut p = graph_problem(2, &[(0, 1)]);
    p.method_of = vec![0, 0];
    p.methods = 1;
    p.edges = vec![(0, 1)];
    let s = synthesize(&p, &SynthOptions::default()).unwrap();
    assert_eq!(s.bound, 1);
    assert_eq!(s.protocol.locks, 1);
}

#[test]
fn empty_problem_needs_no_lock() {
    let s = synthesize(&Problem::default(), &SynthOptions::default()).unwrap();
    assert!(s.protocol.held.is_empty());
    assert_eq!(s.iterations.len(), 1);
}

#[test]
fn atomic_field_beats_shared_lock() {
    let mut p = graph_problem(2, &[]);
    p.races = vec![Race { a: 0, b: 1, atomic: Some("c".into()) }];
    p.eligible = vec!["c".into()];
    let s = synthesize(&p, &SynthOptions::default()).unwrap();
    assert_eq!(s.protocol.atomics.iter().collect::<Vec<_>>(), ["c"]);
}

#[test]
fn wcnf_text_round_trip() {
    let mut r = rng(11);
    let p = random_problem(&mut r);
    let enc = encode(&p, 2, &Weights::default());
    let text = enc.wcnf.to_wcnf_string();
    let back = Wcnf::parse(&text).unwrap();
    assert_eq!(back.to_wcnf_string(), text);
    let a = solve(&enc.wcnf, None, 0);
    let b = solve(&back, None, 3);
    assert_eq!(a.cost, b.cost);
}

#[test]
fn model_lines() {
    assert_eq!(parse_model("o 3\ns OPTIMUM FOUND\nv 1 -2 3\n", 3), Some(vec![true, false, true]));
    assert_eq!(parse_model("v 101\n", 3), Some(vec![true, false, true]));
    assert_eq!(parse_model("s UNSATISFIABLE\n", 3), None);
}
