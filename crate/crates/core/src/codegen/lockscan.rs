//! Abstract lock-set interpretation of explicit code.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::explicit::{estmt_to_string, EStmt, ExplicitMonitor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{method}:{pc} `{stmt}`: {msg}")]
pub struct LockViolation {
    pub method: String,
    pub pc: usize,
    pub stmt: String,
    pub msg: String,
}

/// Lock set held before each statement, per method.
pub type HeldSets = Vec<Vec<Option<BTreeSet<usize>>>>;

/// Walk every path: locks are taken in increasing index order, never
/// twice, released only when held, consecutive releases decrease, waits
/// hold exactly the condition's lock and methods end holding nothing.
pub fn scan_locks(em: &ExplicitMonitor) -> Result<HeldSets, LockViolation> {
    let mut all = Vec::new();
    for m in &em.methods {
        let body = &m.body;
        let n = body.len();
        let labels: HashMap<&str, usize> = body
            .iter()
            .enumerate()
            .filter_map(|(i, s)| if let EStmt::Label(l) = s { Some((l.as_str(), i)) } else { None })
            .collect();
        let fail = |pc: usize, msg: String| LockViolation {
            method: m.name.clone(),
            pc,
            stmt: body.get(pc).map(|s| estmt_to_string(s, em)).unwrap_or_else(|| "<end>".into()),
            msg,
        };
        for (pc, w) in body.windows(2).enumerate() {
            if let (EStmt::Unlock(a), EStmt::Unlock(b)) = (&w[0], &w[1]) {
                if b >= a {
                    return Err(fail(pc + 1, format!("releases l{} after l{}", b + 1, a + 1)));
                }
            }
            if let (EStmt::Lock(a), EStmt::Lock(b)) = (&w[0], &w[1]) {
                if b <= a {
                    return Err(fail(pc + 1, format!("acquires l{} after l{}", b + 1, a + 1)));
                }
            }
        }
        let mut state: Vec<Option<BTreeSet<usize>>> = vec![None; n + 1];
        let mut work = vec![0usize];
        state[0] = Some(BTreeSet::new());
        while let Some(pc) = work.pop() {
            let held = state[pc].clone().unwrap();
            if pc == n {
                if !held.is_empty() {
                    return Err(fail(pc, format!("method ends holding {}", show(&held))));
                }
                continue;
            }
            let mut next = held.clone();
            let mut succ = vec![pc + 1];
            match &body[pc] {
                EStmt::Lock(l) => {
                    if next.contains(l) {
                        return Err(fail(pc, format!("re-acquires l{}", l + 1)));
                    }
                    if let Some(h) = next.iter().find(|h| *h > l) {
                        return Err(fail(pc, format!("acquires l{} while holding l{}", l + 1, h + 1)));
                    }
                    next.insert(*l);
                }
                EStmt::Unlock(l) => {
                    if !next.remove(l) {
                        return Err(fail(pc, format!("releases l{} without holding it", l + 1)));
                    }
                }
                EStmt::Await(c) => {
                    let lock = em.condvars[*c].lock;
                    if held != BTreeSet::from([lock]) {
                        return Err(fail(pc, format!("waits holding {}", show(&held))));
                    }
                }
                EStmt::Signal(c) | EStmt::SignalAll(c) => {
                    let lock = em.condvars[*c].lock;
                    if !held.contains(&lock) {
                        return Err(fail(pc, format!("signals without holding l{}", lock + 1)));
                    }
                }
                EStmt::Goto(l) => succ = vec![labels[l.as_str()]],
                EStmt::IfGoto(_, l) => succ.push(labels[l.as_str()]),
                _ => {}
            }
            for s in succ {
                match &state[s] {
                    Some(prev) if *prev != next => {
                        return Err(fail(s, format!("reached holding {} and {}", show(prev), show(&next))));
                    }
                    Some(_) => {}
                    None => {
                        state[s] = Some(next.clone());
                        work.push(s);
                    }
                }
            }
        }
        state.truncate(n);
        all.push(state);
    }
    Ok(all)
}

fn show(s: &BTreeSet<usize>) -> String {
    let v: Vec<String> = s.iter().map(|l| format!("l{}", l + 1)).collect();
    format!("{{{}}}", v.join(","))
}
