//! Sequentially reachable states and two-thread evaluation contexts.

use std::collections::{HashSet, VecDeque};

use crate::exec::Program;
use crate::fdg::Fdg;

/// Which monitor states a commutativity check quantifies over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// States reached by running whole methods one after another from the
    /// initial state.
    #[default]
    Reachable,
    /// Every assignment of field values within the declared domains.
    All,
}

impl std::str::FromStr for Scope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reachable" => Ok(Scope::Reachable),
            "all" => Ok(Scope::All),
            _ => Err(format!("unknown scope `{s}` (reachable|all)")),
        }
    }
}

/// Field states closed under sequential method execution.
/// `None` when more than `budget` states are found.
pub fn reachable_states(prog: &Program, budget: usize) -> Option<Vec<Vec<i64>>> {
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(prog.init.clone());
    queue.push_back(prog.init.clone());
    let args: Vec<Vec<Vec<i64>>> = prog.methods.iter().map(|m| m.frame.arg_space()).collect();
    while let Some(s) = queue.pop_front() {
        for (m, space) in args.iter().enumerate() {
            for a in space {
                let mut t = s.clone();
                if let Ok(true) = prog.run_method(m, &mut t, a) {
                    if seen.insert(t.clone()) {
                        if seen.len() > budget {
                            return None;
                        }
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    let mut out: Vec<Vec<i64>> = seen.into_iter().collect();
    out.sort();
    Some(out)
}

/// Every field assignment within the declared domains.
pub fn all_states(prog: &Program, budget: usize) -> Option<Vec<Vec<i64>>> {
    let mut total: u64 = 1;
    for s in &prog.layout.fields {
        for _ in 0..s.len {
            total = total.saturating_mul(s.range.size());
        }
    }
    if total > budget as u64 {
        return None;
    }
    let mut out = vec![vec![]];
    for s in &prog.layout.fields {
        for _ in 0..s.len {
            let mut next = Vec::with_capacity(out.len() * s.range.size() as usize);
            for p in &out {
                for v in s.range.values() {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            out = next;
        }
    }
    Some(out)
}

/// Monitor state with two threads parked at fragment entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    pub fields: Vec<i64>,
    /// Locals of the thread about to run the first fragment.
    pub first: Vec<i64>,
    /// Locals of the thread about to run the second fragment.
    pub second: Vec<i64>,
}

/// Contexts in which one thread sits at the entry of `a` and another at
/// the entry of `b`, reached by running each method's prefix from `base`
/// (both orders). `None` when the count would exceed `budget`.
pub fn contexts(prog: &Program, fdg: &Fdg, base: &[Vec<i64>], a: usize, b: usize, budget: usize) -> Option<Vec<Context>> {
    let (fa, fb) = (&fdg.fragments[a], &fdg.fragments[b]);
    let (ma, mb) = (&prog.methods[fa.method], &prog.methods[fb.method]);
    let est = (base.len() as u64).saturating_mul(ma.frame.arg_space_size()).saturating_mul(mb.frame.arg_space_size());
    if est > budget as u64 {
        return None;
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let (sa, sb) = (ma.frame.arg_space(), mb.frame.arg_space());
    for s in base {
        for x in &sa {
            for y in &sb {
                for a_first in [true, false] {
                    let mut f = s.clone();
                    let mut la = ma.frame.enter(x);
                    let mut lb = mb.frame.enter(y);
                    let ok = if a_first {
                        matches!(prog.run_prefix(fa.method, fa.entry, &mut f, &mut la), Ok(true))
                            && matches!(prog.run_prefix(fb.method, fb.entry, &mut f, &mut lb), Ok(true))
                    } else {
                        matches!(prog.run_prefix(fb.method, fb.entry, &mut f, &mut lb), Ok(true))
                            && matches!(prog.run_prefix(fa.method, fa.entry, &mut f, &mut la), Ok(true))
                    };
                    if !ok {
                        continue;
                    }
                    let c = Context { fields: f, first: la, second: lb };
                    if seen.insert(c.clone()) {
                        out.push(c);
                    }
                }
            }
        }
    }
    Some(out)
}
