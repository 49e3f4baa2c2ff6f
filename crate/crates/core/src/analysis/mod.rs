//! Atomic candidates, races and safe interleavings of an FDG.

pub mod atomics;
pub mod commute;
pub mod races;
pub mod reach;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::json;

pub use atomics::atomic_eligible;
pub use commute::{left_commute, right_commute, Verdict};
pub use races::{detect_races, fragment_rw, RaceMap};
pub use reach::{all_states, reachable_states, Scope};

use crate::exec::Program;
use crate::fdg::Fdg;
use crate::frontend::MonitorAst;

pub const DEFAULT_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy)]
pub struct AnalysisConfig {
    /// Cap on states / contexts enumerated per check.
    pub budget: usize,
    pub scope: Scope,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { budget: DEFAULT_BUDGET, scope: Scope::Reachable }
    }
}

/// An interleaving: fragment `v` running between the two ends of `edge`.
pub type Interleaving = (usize, (usize, usize));

#[derive(Debug, Clone)]
pub struct AnalysisResults {
    pub atomics: BTreeSet<String>,
    pub races: RaceMap,
    /// `left[v][w]`: does `v` left-commute with `w`.
    pub left: Vec<Vec<Verdict>>,
    pub safe: BTreeSet<Interleaving>,
    /// Number of base states, or `None` if the budget ran out.
    pub states: Option<usize>,
}

impl AnalysisResults {
    pub fn left_commutes(&self, v: usize, w: usize) -> bool {
        self.left[v][w].holds()
    }

    pub fn right_commutes(&self, v: usize, w: usize) -> bool {
        self.left[w][v].holds()
    }

    /// Some check hit the state/context budget and fell back to a
    /// conservative answer.
    pub fn budget_exhausted(&self) -> bool {
        self.states.is_none() || !self.races.fallback.is_empty() || self.left.iter().flatten().any(|v| *v == Verdict::Budget)
    }

    pub fn is_safe(&self, v: usize, e: (usize, usize)) -> bool {
        self.safe.contains(&(v, e))
    }

    pub fn to_json(&self, fdg: &Fdg) -> serde_json::Value {
        let name = |f: usize| fdg.fragments[f].name();
        let races: Vec<_> = self
            .races
            .races
            .iter()
            .filter(|((a, b), _)| a <= b)
            .map(|((a, b), ps)| {
                json!({
                    "pair": [name(*a), name(*b)],
                    "paths": ps.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                    "fallback": self.races.fallback.contains(&(*a, *b)),
                })
            })
            .collect();
        let refined: Vec<_> = self
            .races
            .refined
            .iter()
            .filter(|(a, b)| a <= b)
            .map(|(a, b)| json!({ "pair": [name(*a), name(*b)], "note": "refined (bounded)" }))
            .collect();
        let safe: Vec<_> = self.safe.iter().map(|(v, (s, t))| json!([name(*v), [name(*s), name(*t)]])).collect();
        let mut commute = Vec::new();
        for (v, row) in self.left.iter().enumerate() {
            for (w, verdict) in row.iter().enumerate() {
                let mut j = serde_json::to_value(verdict).unwrap();
                j["left"] = json!(name(v));
                j["right"] = json!(name(w));
                commute.push(j);
            }
        }
        json!({
            "atomics": self.atomics,
            "races": races,
            "refined": refined,
            "safe_interleavings": safe,
            "left_commute": commute,
            "base_states": self.states,
        })
    }
}

/// Interleavings `(v, (s, t))` where `v` left-commutes with everything
/// before `s` and right-commutes with everything after `t`.
pub fn find_safe_interleavings(fdg: &Fdg, left: impl Fn(usize, usize) -> bool) -> BTreeSet<Interleaving> {
    let reach = fdg.closure();
    let n = fdg.len();
    let mut out = BTreeSet::new();
    for v in 0..n {
        for &(s, t) in &fdg.edges {
            let before = (0..n).filter(|x| reach[*x][s]).all(|x| left(v, x));
            let after = before && (0..n).filter(|x| reach[t][*x]).all(|x| left(x, v));
            if after {
                out.insert((v, (s, t)));
            }
        }
    }
    out
}

/// Base states for commutativity and race refinement.
pub fn base_states(prog: &Program, cfg: &AnalysisConfig) -> Option<Vec<Vec<i64>>> {
    match cfg.scope {
        Scope::Reachable => reachable_states(prog, cfg.budget),
        Scope::All => all_states(prog, cfg.budget),
    }
}

/// Full left-commutativity table.
pub fn commute_table(prog: &Program, fdg: &Fdg, base: Option<&[Vec<i64>]>, budget: usize) -> Vec<Vec<Verdict>> {
    let n = fdg.len();
    let cells: Vec<Verdict> = (0..n * n)
        .into_par_iter()
        .map(|i| match base {
            Some(b) => left_commute(prog, fdg, b, i / n, i % n, budget),
            None => Verdict::Budget,
        })
        .collect();
    cells.chunks(n.max(1)).map(|c| c.to_vec()).collect()
}

pub fn analyze(ast: &MonitorAst, fdg: &Fdg, cfg: &AnalysisConfig) -> AnalysisResults {
    let prog = Program::new(ast, &fdg.cfgs);
    let base = base_states(&prog, cfg);
    let races = detect_races(ast, fdg, &prog, base.as_deref(), cfg.budget);
    let left = commute_table(&prog, fdg, base.as_deref(), cfg.budget);
    let safe = find_safe_interleavings(fdg, |v, w| left[v][w].holds());
    AnalysisResults { atomics: atomic_eligible(ast), races, left, safe, states: base.map(|b| b.len()) }
}
