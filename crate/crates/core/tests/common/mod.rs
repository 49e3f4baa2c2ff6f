//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use monweaver::maxsat::{encode, solve, Problem, Race, Wcnf, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn read_corpus(name: &str) -> String {
    std::fs::read_to_string(corpus(name)).expect("corpus file")
}

pub const BENCHMARKS: &[&str] = &["buffer", "counters", "crossing", "empty", "handoff", "queue", "rwlock", "semaphore", "stats"];

/// Undirected simple graph on `n` vertices as an edge bitmask over pairs `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Graph {
    pub n: usize,
    pub mask: u32,
}

fn pair_index(n: usize) -> Vec<Vec<usize>> {
    let mut idx = vec![vec![usize::MAX; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            idx[i][j] = k;
            idx[j][i] = k;
            k += 1;
        }
    }
    idx
}

impl Graph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let idx = pair_index(self.n);
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.mask >> idx[i][j] & 1 == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.mask >> pair_index(self.n)[a][b] & 1 == 1
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// One representative per isomorphism class of graphs on exactly `n` vertices.
pub fn nonisomorphic(n: usize) -> Vec<Graph> {
    let idx = pair_index(n);
    let pairs = n * n.saturating_sub(1) / 2;
    let perms = permutations(n);
    let mut seen = HashSet::new();
    let mut reps = Vec::new();
    for mask in 0..(1u32 << pairs) {
        if seen.contains(&mask) {
            continue;
        }
        reps.push(Graph { n, mask });
        let g = Graph { n, mask };
        for p in &perms {
            let mut m = 0u32;
            for (a, b) in g.edges() {
                m |= 1 << idx[p[a]][p[b]];
            }
            seen.insert(m);
        }
    }
    reps
}

fn maximal_cliques(g: &Graph) -> Vec<u32> {
    let mut cliques: Vec<u32> = Vec::new();
    for s in 1u32..(1 << g.n) {
        let vs: Vec<usize> = (0..g.n).filter(|v| s >> v & 1 == 1).collect();
        if vs.len() < 2 {
            continue;
        }
        let clique = vs.iter().enumerate().all(|(i, a)| vs[i + 1..].iter().all(|b| g.adjacent(*a, *b)));
        if clique {
            cliques.push(s);
        }
    }
    let all = cliques.clone();
    cliques.retain(|c| !all.iter().any(|d| d != c && d & c == *c));
    cliques
}

/// Minimum number of cliques covering every edge.
pub fn min_edge_clique_cover(g: &Graph) -> usize {
    let edges = g.edges();
    let cliques = maximal_cliques(g);
    fn cover(edges: &[(usize, usize)], covered: &[bool], cliques: &[u32], left: usize) -> bool {
        let Some(e) = (0..edges.len()).find(|e| !covered[*e]) else { return true };
        if left == 0 {
            return false;
        }
        let (a, b) = edges[e];
        for &c in cliques.iter().filter(|c| *c >> a & 1 == 1 && *c >> b & 1 == 1) {
            let next: Vec<bool> =
                edges.iter().zip(covered).map(|(&(x, y), done)| *done || (c >> x & 1 == 1 && c >> y & 1 == 1)).collect();
            if cover(edges, &next, cliques, left - 1) {
                return true;
            }
        }
        false
    }
    (0..=edges.len()).find(|k| cover(&edges, &vec![false; edges.len()], &cliques, *k)).unwrap()
}

/// Race-only instance: conflicts on edges, parallelism wanted on non-edges.
pub fn race_only(g: &Graph) -> Problem {
    let edges = g.edges();
    let mut race_free = Vec::new();
    for a in 0..g.n {
        for b in a + 1..g.n {
            if !g.adjacent(a, b) {
                race_free.push((a, b));
            }
        }
    }
    Problem {
        names: (1..=g.n).map(|i| format!("f{i}")).collect(),
        method_of: (0..g.n).collect(),
        methods: g.n,
        wait_pred: vec![None; g.n],
        races: edges.into_iter().map(|(a, b)| Race { a, b, atomic: None }).collect(),
        race_free,
        ..Default::default()
    }
}

/// Smallest lock bound whose optimum keeps every non-edge pair lock-disjoint,
/// reported as the number of locks that optimum actually uses.
pub fn solver_min_locks(p: &Problem, upper: usize) -> Option<usize> {
    let wt = Weights { max_par: 1000, min_lock: 1, min_atom: 1 };
    for k in 1..=upper {
        let mut enc = encode(p, k, &wt);
        order_lock_columns(&mut enc.wcnf, &enc.hold);
        let out = solve(&enc.wcnf, None, 0);
        let par_cost = enc.wcnf.soft.iter().filter(|s| s.weight == wt.max_par).filter(|s| !Wcnf::clause_holds(&out.model, &s.lits)).count();
        if par_cost == 0 {
            let used = (0..k).filter(|j| (0..p.len()).any(|f| out.model[(enc.hold[f][*j] - 1) as usize])).count();
            return Some(used);
        }
    }
    None
}

/// Lock columns in lexicographically decreasing order. Sound only when
/// locks are interchangeable, i.e. there are no FDG edges.
pub fn order_lock_columns(w: &mut Wcnf, hold: &[Vec<i32>]) {
    let locks = hold.first().map_or(0, |h| h.len());
    for j in 0..locks.saturating_sub(1) {
        let mut eq: Option<i32> = None;
        for row in hold {
            let (a, b) = (row[j], row[j + 1]);
            let guard: Vec<i32> = eq.map(|e| vec![-e]).unwrap_or_default();
            w.add_hard([guard.clone(), vec![-b, a]].concat());
            let next = w.new_var(format!("lex_l{}_{}", j + 1, a));
            w.add_hard([guard.clone(), vec![-a, -b, next]].concat());
            w.add_hard([guard, vec![a, b, next]].concat());
            eq = Some(next);
        }
    }
}

/// Random encoder input: up to six fragments in up to three methods.
pub fn random_problem(rng: &mut ChaCha8Rng) -> Problem {
    let n = rng.gen_range(2..=6);
    let methods = rng.gen_range(1..=3usize.min(n));
    let mut method_of: Vec<usize> = (0..n).map(|i| if i < methods { i } else { rng.gen_range(0..methods) }).collect();
    method_of.sort();
    let mut edges = Vec::new();
    for f in 1..n {
        if method_of[f] == method_of[f - 1] {
            edges.push((f - 1, f));
        }
    }
    let eligible: Vec<String> = ["a", "b"][..rng.gen_range(0..=2)].iter().map(|s| s.to_string()).collect();
    let preds: Vec<String> = ["p", "q"][..rng.gen_range(0..=2)].iter().map(|s| s.to_string()).collect();
    let wait_pred: Vec<Option<usize>> =
        (0..n).map(|_| if !preds.is_empty() && rng.gen_bool(0.3) { Some(rng.gen_range(0..preds.len())) } else { None }).collect();
    let mut races = Vec::new();
    let mut race_free = Vec::new();
    for a in 0..n {
        for b in a..n {
            if rng.gen_bool(0.35) {
                let atomic = if !eligible.is_empty() && rng.gen_bool(0.5) { Some(eligible[rng.gen_range(0..eligible.len())].clone()) } else { None };
                races.push(Race { a, b, atomic });
            } else if a < b {
                race_free.push((a, b));
            }
        }
    }
    let mut unsafe_interleavings = Vec::new();
    for &(s, t) in &edges {
        for v in 0..n {
            if method_of[v] != method_of[s] && rng.gen_bool(0.15) {
                unsafe_interleavings.push((v, s, t));
            }
        }
    }
    Problem {
        names: (1..=n).map(|i| format!("f{i}")).collect(),
        method_of,
        methods,
        wait_pred,
        preds,
        edges,
        races,
        unsafe_interleavings,
        race_free,
        eligible,
    }
}

/// Optimal objective by enumerating every lock and atomic assignment and
/// evaluating the rules directly.
pub fn brute_force_objective(p: &Problem, locks: usize, wt: &Weights) -> u64 {
    let n = p.len();
    let hv = n * locks;
    let av = p.eligible.len();
    let waiters = p.waiters();
    let mut best = u64::MAX;
    for bits in 0u64..(1 << (hv + av)) {
        let held = |f: usize| -> u64 { bits >> (f * locks) & ((1 << locks) - 1) };
        let atomic = |name: &str| p.eligible.iter().position(|e| e == name).is_some_and(|i| bits >> (hv + i) & 1 == 1);
        let share = |fs: &[usize]| fs.iter().fold((1u64 << locks) - 1, |acc, f| acc & held(*f)) != 0;
        let races_ok = p.races.iter().all(|r| share(&[r.a, r.b]) || r.atomic.as_deref().is_some_and(atomic));
        if !races_ok {
            continue;
        }
        if !p.unsafe_interleavings.iter().all(|&(v, s, t)| share(&[v, s, t])) {
            continue;
        }
        if !waiters.iter().all(|ws| ws.is_empty() || (share(ws) && ws.iter().all(|w| held(*w) == held(ws[0])))) {
            continue;
        }
        let order_ok = p.edges.iter().all(|&(s, t)| {
            (0..locks).all(|lo| {
                (lo + 1..locks).all(|hi| {
                    let h = |f: usize, j: usize| held(f) >> j & 1 == 1;
                    !(h(s, hi) && h(t, hi) && !h(s, lo) && h(t, lo))
                })
            })
        });
        if !order_ok {
            continue;
        }
        let mut cost = 0;
        for m in 0..p.methods {
            let used = (0..n).filter(|f| p.method_of[*f] == m).fold(0u64, |acc, f| acc | held(f));
            cost += used.count_ones() as u64 * wt.min_lock;
        }
        cost += (0..av).filter(|i| bits >> (hv + i) & 1 == 1).count() as u64 * wt.min_atom;
        cost += p.race_free.iter().filter(|&&(a, b)| held(a) & held(b) != 0).count() as u64 * wt.max_par;
        best = best.min(cost);
    }
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
