//! Lock/atomic allocation as weighted partial MaxSAT.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::wcnf::{Family, Wcnf};
use crate::analysis::AnalysisResults;
use crate::fdg::{Fdg, FragmentKind};
use crate::frontend::{expr_to_string, MonitorAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Weights {
    pub max_par: u64,
    pub min_lock: u64,
    pub min_atom: u64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { max_par: 8, min_lock: 4, min_atom: 2 }
    }
}

impl std::str::FromStr for Weights {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<u64> = s
            .split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad weight `{p}`")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [p, l, a] if *p > 0 && *l > 0 && *a > 0 => Ok(Weights { max_par: *p, min_lock: *l, min_atom: *a }),
            _ => Err("expected three positive weights: w_par,w_lock,w_atom".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Race {
    pub a: usize,
    pub b: usize,
    /// The sole racing field, when it may be made atomic instead.
    pub atomic: Option<String>,
}

/// Everything the encoding needs, detached from the source monitor.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Problem {
    pub names: Vec<String>,
    pub method_of: Vec<usize>,
    pub methods: usize,
    /// Predicate index of waituntil fragments (non-trivial guards only).
    pub wait_pred: Vec<Option<usize>>,
    pub preds: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    /// Racing pairs with `a <= b`.
    pub races: Vec<Race>,
    /// Interleavings `(v, s, t)` not known to be safe.
    pub unsafe_interleavings: Vec<(usize, usize, usize)>,
    /// Race-free pairs with `a < b`, signal directives excluded.
    pub race_free: Vec<(usize, usize)>,
    pub eligible: Vec<String>,
}

impl Problem {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn from_analysis(ast: &MonitorAst, fdg: &Fdg, res: &AnalysisResults) -> Problem {
        let n = fdg.len();
        let preds: Vec<String> = ast.predicates().iter().map(expr_to_string).collect();
        let wait_pred = (0..n)
            .map(|f| fdg.wait_pred(f).and_then(|p| preds.iter().position(|q| *q == expr_to_string(p))))
            .collect();
        let signal = |f: usize| fdg.fragments[f].kind == FragmentKind::Signal;
        let mut races = Vec::new();
        let mut race_free = Vec::new();
        for a in 0..n {
            for b in a..n {
                match res.races.get(a, b) {
                    Some(paths) => {
                        let atomic = match paths.iter().collect::<Vec<_>>().as_slice() {
                            [p] if p.index.is_none() && res.atomics.contains(&p.base) => Some(p.base.clone()),
                            _ => None,
                        };
                        races.push(Race { a, b, atomic });
                    }
                    None if a < b && !signal(a) && !signal(b) => race_free.push((a, b)),
                    None => {}
                }
            }
        }
        // Signal directives do not touch state: interleaving next to one is
        // the same as interleaving across it, so chains of them are skipped.
        let reach = fdg.closure();
        let strongly_safe = |v: usize, s: usize, t: usize| {
            (0..n).filter(|x| reach[*x][s]).all(|x| res.left_commutes(v, x))
                && (0..n).filter(|x| reach[t][*x]).all(|x| res.left_commutes(x, v))
        };
        let mut unsafe_interleavings = Vec::new();
        for s in (0..n).filter(|s| !signal(*s)) {
            let mut across = BTreeSet::new();
            let mut seen = BTreeSet::new();
            let mut stack: Vec<usize> = fdg.succs(s).into_iter().filter(|t| signal(*t)).collect();
            while let Some(x) = stack.pop() {
                if seen.insert(x) {
                    for y in fdg.succs(x) {
                        if signal(y) {
                            stack.push(y);
                        } else {
                            across.insert(y);
                        }
                    }
                }
            }
            for v in (0..n).filter(|v| !signal(*v)) {
                for t in fdg.succs(s).into_iter().filter(|t| !signal(*t)) {
                    if !res.is_safe(v, (s, t)) {
                        unsafe_interleavings.push((v, s, t));
                    }
                }
                for &u in &across {
                    if !strongly_safe(v, s, u) {
                        unsafe_interleavings.push((v, s, u));
                    }
                }
            }
        }
        unsafe_interleavings.sort();
        unsafe_interleavings.dedup();
        Problem {
            names: fdg.fragments.iter().map(|f| f.name()).collect(),
            method_of: fdg.fragments.iter().map(|f| f.method).collect(),
            methods: fdg.method_names.len(),
            wait_pred,
            preds,
            edges: fdg.edge_list(),
            races,
            unsafe_interleavings,
            race_free,
            eligible: res.atomics.iter().cloned().collect(),
        }
    }

    /// Waituntil fragments per predicate.
    pub fn waiters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.preds.len()];
        for (f, p) in self.wait_pred.iter().enumerate() {
            if let Some(p) = p {
                out[*p].push(f);
            }
        }
        out
    }
}

/// Upper bound on the lock count: conflict-graph edges, capped by the
/// largest triangle-free edge count on its vertices.
pub fn compute_max_locks(p: &Problem) -> usize {
    let edges: BTreeSet<(usize, usize)> = p.races.iter().map(|r| (r.a.min(r.b), r.a.max(r.b))).collect();
    let verts: BTreeSet<usize> = edges.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let n = verts.len();
    edges.len().min(n * n / 4).max(1)
}

#[derive(Debug, Clone)]
pub struct Encoding {
    pub wcnf: Wcnf,
    pub locks: usize,
    /// `hold[f][j]`: fragment `f` holds lock `j`.
    pub hold: Vec<Vec<i32>>,
    pub atomic: BTreeMap<String, i32>,
}

struct Builder<'a> {
    p: &'a Problem,
    w: Wcnf,
    locks: usize,
    hold: Vec<Vec<i32>>,
    mutex: HashMap<Vec<usize>, Vec<i32>>,
}

impl Builder<'_> {
    /// Per lock, a variable implying every fragment of `set` holds it.
    fn mutex(&mut self, set: &[usize]) -> Vec<i32> {
        let mut key = set.to_vec();
        key.sort();
        key.dedup();
        if let Some(v) = self.mutex.get(&key) {
            return v.clone();
        }
        let label: Vec<&str> = key.iter().map(|f| self.p.names[*f].as_str()).collect();
        let mut out = Vec::new();
        for j in 0..self.locks {
            let m = self.w.new_var(format!("mutex_{}_l{}", label.join("_"), j + 1));
            for &f in &key {
                self.w.add_hard(vec![-m, self.hold[f][j]]);
            }
            out.push(m);
        }
        self.mutex.insert(key, out.clone());
        out
    }
}

pub fn encode(p: &Problem, locks: usize, wt: &Weights) -> Encoding {
    assert!(locks >= 1);
    let mut w = Wcnf::default();
    let hold: Vec<Vec<i32>> =
        (0..p.len()).map(|f| (0..locks).map(|j| w.new_var(format!("h_{}_l{}", p.names[f], j + 1))).collect()).collect();
    let atomic: BTreeMap<String, i32> = p.eligible.iter().map(|f| (f.clone(), w.new_var(format!("a_{f}")))).collect();
    let mut b = Builder { p, w, locks, hold, mutex: HashMap::new() };

    for r in &p.races {
        let mut c = b.mutex(&[r.a, r.b]);
        if let Some(a) = r.atomic.as_ref().and_then(|f| atomic.get(f)) {
            c.push(*a);
        }
        b.w.add_hard(c);
    }
    for &(v, s, t) in &p.unsafe_interleavings {
        let c = b.mutex(&[v, s, t]);
        b.w.add_hard(c);
    }
    for ws in p.waiters() {
        if ws.is_empty() {
            continue;
        }
        let c = b.mutex(&ws);
        b.w.add_hard(c);
        for (i, &x) in ws.iter().enumerate() {
            for &y in &ws[i + 1..] {
                for j in 0..locks {
                    let (hx, hy) = (b.hold[x][j], b.hold[y][j]);
                    b.w.add_hard(vec![-hx, hy]);
                    b.w.add_hard(vec![hx, -hy]);
                }
            }
        }
    }
    for &(s, t) in &p.edges {
        for lo in 0..locks {
            for hi in lo + 1..locks {
                let h = &b.hold;
                let c = vec![-h[s][hi], -h[t][hi], h[s][lo], -h[t][lo]];
                b.w.add_hard(c);
            }
        }
    }
    for m in 0..p.methods {
        let frags: Vec<usize> = (0..p.len()).filter(|f| p.method_of[*f] == m).collect();
        if frags.is_empty() {
            continue;
        }
        for j in 0..locks {
            let q = b.w.new_var(format!("free_m{}_l{}", m, j + 1));
            for &f in &frags {
                b.w.add_hard(vec![-q, -b.hold[f][j]]);
            }
            b.w.add_soft(vec![q], wt.min_lock, Family::MinLock);
        }
    }
    for a in atomic.values() {
        b.w.add_soft(vec![-a], wt.min_atom, Family::MinAtom);
    }
    for &(x, y) in &p.race_free {
        let par = b.w.new_var(format!("par_{}_{}", p.names[x], p.names[y]));
        for j in 0..locks {
            b.w.add_hard(vec![-par, -b.hold[x][j], -b.hold[y][j]]);
        }
        b.w.add_soft(vec![par], wt.max_par, Family::MaxPar);
    }
    Encoding { wcnf: b.w, locks, hold: b.hold, atomic }
}
