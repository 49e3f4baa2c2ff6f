//! Left/right commutativity by running both orders from every context.

use serde::Serialize;

use super::reach::{contexts, Context};
use crate::exec::Program;
use crate::fdg::Fdg;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Commutes { contexts: usize },
    Fails { state: serde_json::Value, reason: String },
    Budget,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Commutes { .. })
    }
}

pub(crate) fn inside(fdg: &Fdg, f: usize) -> Vec<bool> {
    let mut m = vec![false; fdg.cfg_of(f).len()];
    for &b in &fdg.fragments[f].blocks {
        m[b] = true;
    }
    m
}

enum Run {
    Done,
    Blocked,
    Error(String),
}

fn run(prog: &Program, fdg: &Fdg, f: usize, mask: &[bool], fields: &mut [i64], locals: &mut [i64]) -> Run {
    let fr = &fdg.fragments[f];
    match prog.run_fragment(fr.method, fr.entry, mask, fields, locals, None) {
        Ok(Some(_)) => Run::Done,
        Ok(None) => Run::Blocked,
        Err(e) => Run::Error(e.to_string()),
    }
}

/// Does `v` left-commute with `w`: whenever `w; v` completes (guards
/// assumed), `v; w` completes (guards asserted) with the same outcome.
pub fn left_commute(prog: &Program, fdg: &Fdg, base: &[Vec<i64>], v: usize, w: usize, budget: usize) -> Verdict {
    let Some(ctxs) = contexts(prog, fdg, base, v, w, budget) else {
        return Verdict::Budget;
    };
    let (mv, mw) = (inside(fdg, v), inside(fdg, w));
    for Context { fields, first, second } in &ctxs {
        let (mut f1, mut lv1, mut lw1) = (fields.clone(), first.clone(), second.clone());
        if !matches!(run(prog, fdg, w, &mw, &mut f1, &mut lw1), Run::Done) {
            continue;
        }
        if !matches!(run(prog, fdg, v, &mv, &mut f1, &mut lv1), Run::Done) {
            continue;
        }
        let (mut f2, mut lv2, mut lw2) = (fields.clone(), first.clone(), second.clone());
        let fail = |reason: String| Verdict::Fails { state: prog.layout.to_json(fields), reason };
        match run(prog, fdg, v, &mv, &mut f2, &mut lv2) {
            Run::Done => {}
            Run::Blocked => return fail(format!("{} blocks when moved first", fdg.fragments[v].name())),
            Run::Error(e) => return fail(e),
        }
        match run(prog, fdg, w, &mw, &mut f2, &mut lw2) {
            Run::Done => {}
            Run::Blocked => return fail(format!("{} blocks after {}", fdg.fragments[w].name(), fdg.fragments[v].name())),
            Run::Error(e) => return fail(e),
        }
        if f1 != f2 || lv1 != lv2 || lw1 != lw2 {
            return fail("final states differ".into());
        }
    }
    Verdict::Commutes { contexts: ctxs.len() }
}

/// `v` right-commutes with `w` iff `w` left-commutes with `v`.
pub fn right_commute(prog: &Program, fdg: &Fdg, base: &[Vec<i64>], v: usize, w: usize, budget: usize) -> Verdict {
    left_commute(prog, fdg, base, w, v, budget)
}
