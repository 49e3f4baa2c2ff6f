//! Fragment pairs accessing a common location with at least one write.

use std::collections::{BTreeMap, BTreeSet};

use super::commute::inside;
use super::reach::contexts;
use crate::exec::{AccessLog, Program};
use crate::fdg::{Fdg, Instr};
use crate::frontend::{predicate_rw, read_write_sets, AccessPath, Index, MonitorAst, RwSets};

pub fn fragment_rw(ast: &MonitorAst, fdg: &Fdg, f: usize) -> RwSets {
    let mut rw = RwSets::default();
    for i in fdg.instrs(f) {
        match i {
            Instr::Wait(p) => rw.union(&predicate_rw(ast, p)),
            Instr::Stmt(s) => rw.union(&read_write_sets(ast, s)),
        }
    }
    rw
}

/// Pairs of syntactically aliasing paths where one side is written.
fn conflicts(a: &RwSets, b: &RwSets) -> Vec<(AccessPath, AccessPath)> {
    let mut out = Vec::new();
    for p in &a.writes {
        for q in b.all() {
            if p.may_alias(q) {
                out.push((p.clone(), q.clone()));
            }
        }
    }
    for q in &b.writes {
        for p in &a.reads {
            if p.may_alias(q) {
                out.push((p.clone(), q.clone()));
            }
        }
    }
    out
}

fn exact(p: &AccessPath, q: &AccessPath) -> bool {
    p == q && !matches!(p.index, Some(Index::Sym(_)))
}

#[derive(Debug, Clone, Default)]
pub struct RaceMap {
    /// Symmetric: both `(a, b)` and `(b, a)` are present.
    pub races: BTreeMap<(usize, usize), BTreeSet<AccessPath>>,
    /// Pairs whose syntactic overlap was refuted by bounded refinement.
    pub refined: BTreeSet<(usize, usize)>,
    /// Pairs left syntactic because the budget ran out.
    pub fallback: BTreeSet<(usize, usize)>,
}

impl RaceMap {
    pub fn get(&self, a: usize, b: usize) -> Option<&BTreeSet<AccessPath>> {
        self.races.get(&(a, b))
    }

    pub fn races(&self, a: usize, b: usize) -> bool {
        self.races.contains_key(&(a, b))
    }
}

/// Syntactic race detection; array cells with computed indices are
/// refined over `base` states when given.
pub fn detect_races(ast: &MonitorAst, fdg: &Fdg, prog: &Program, base: Option<&[Vec<i64>]>, budget: usize) -> RaceMap {
    let n = fdg.len();
    let rws: Vec<RwSets> = (0..n).map(|f| fragment_rw(ast, fdg, f)).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    use rayon::prelude::*;
    let results: Vec<_> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let cs = conflicts(&rws[a], &rws[b]);
            let mut keep: BTreeSet<AccessPath> = BTreeSet::new();
            let mut doubtful: BTreeMap<String, BTreeSet<AccessPath>> = BTreeMap::new();
            for (p, q) in cs {
                if p.index.is_none() || exact(&p, &q) {
                    keep.insert(p);
                    keep.insert(q);
                } else {
                    doubtful.entry(p.base.clone()).or_default().extend([p, q]);
                }
            }
            let mut status = 0u8;
            if !doubtful.is_empty() {
                let concrete = base.and_then(|s| concrete_conflicts(prog, fdg, s, a, b, budget));
                match concrete {
                    Some(cells) => {
                        for (basename, paths) in doubtful {
                            let slot = prog.layout.slot(&basename).expect("field");
                            let s = &prog.layout.fields[slot];
                            if cells.iter().any(|c| *c >= s.offset && *c < s.offset + s.len) {
                                keep.extend(paths);
                            } else {
                                status = 1;
                            }
                        }
                    }
                    None => {
                        status = 2;
                        for paths in doubtful.into_values() {
                            keep.extend(paths);
                        }
                    }
                }
            }
            ((a, b), keep, status)
        })
        .collect();
    let mut map = RaceMap::default();
    for ((a, b), keep, status) in results {
        match status {
            1 => {
                map.refined.insert((a, b));
                map.refined.insert((b, a));
            }
            2 => {
                map.fallback.insert((a, b));
                map.fallback.insert((b, a));
            }
            _ => {}
        }
        if !keep.is_empty() {
            map.races.insert((a, b), keep.clone());
            map.races.insert((b, a), keep);
        }
    }
    map
}

/// Cells written by one fragment and touched by the other in some joint
/// context. `None` on budget exhaustion.
fn concrete_conflicts(prog: &Program, fdg: &Fdg, base: &[Vec<i64>], a: usize, b: usize, budget: usize) -> Option<BTreeSet<usize>> {
    let ctxs = contexts(prog, fdg, base, a, b, budget)?;
    let (ma, mb) = (inside(fdg, a), inside(fdg, b));
    let (fa, fb) = (&fdg.fragments[a], &fdg.fragments[b]);
    let mut out = BTreeSet::new();
    for c in ctxs {
        let mut la = AccessLog::default();
        let mut lb = AccessLog::default();
        let _ = prog.run_fragment(fa.method, fa.entry, &ma, &mut c.fields.clone(), &mut c.first.clone(), Some(&mut la));
        let _ = prog.run_fragment(fb.method, fb.entry, &mb, &mut c.fields.clone(), &mut c.second.clone(), Some(&mut lb));
        for w in &la.writes {
            if lb.reads.contains(w) || lb.writes.contains(w) {
                out.insert(*w);
            }
        }
        for w in &lb.writes {
            if la.reads.contains(w) {
                out.insert(*w);
            }
        }
    }
    Some(out)
}
