//! Schedule enumeration over the explicit machine.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::implicit::Snapshot;
use super::machine::{Event, MState, Machine, Outcome};

pub const DEFAULT_STATE_BUDGET: usize = 2_000_000;
const MAX_WITNESSES: usize = 8;
const RANDOM_STEP_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Counts {
    pub states: usize,
    pub finals: usize,
    pub blocked: usize,
    pub stuck: usize,
    pub deadlock: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Exploration {
    /// Distinct final observations with one trace reaching each.
    pub finals: BTreeMap<Snapshot, Vec<Event>>,
    pub blocked: BTreeMap<Snapshot, Vec<Event>>,
    /// STUCK and DEADLOCK verdicts (first few, with traces).
    pub failures: Vec<Witness>,
    pub counts: Counts,
    pub truncated: bool,
}

impl Exploration {
    fn record(&mut self, m: &Machine, st: &MState, outcome: Outcome, path: &[Event]) {
        match &outcome {
            Outcome::Final => {
                self.counts.finals += 1;
                self.finals.entry(m.snapshot(st)).or_insert_with(|| path.to_vec());
            }
            Outcome::Blocked => {
                self.counts.blocked += 1;
                self.blocked.entry(m.snapshot(st)).or_insert_with(|| path.to_vec());
            }
            Outcome::Stuck { .. } | Outcome::Deadlock { .. } => {
                if matches!(outcome, Outcome::Stuck { .. }) {
                    self.counts.stuck += 1;
                } else {
                    self.counts.deadlock += 1;
                }
                if self.failures.len() < MAX_WITNESSES {
                    self.failures.push(Witness { outcome, trace: path.iter().map(|e| m.statement(e)).collect() });
                }
            }
        }
    }
}

/// Every schedule from `st`, memoized on whole machine states.
pub fn explore(m: &Machine, init: &MState, budget: usize) -> Exploration {
    let mut ex = Exploration::default();
    let mut seen = HashSet::new();
    let mut path = Vec::new();
    dfs(m, init.clone(), &mut seen, &mut path, &mut ex, budget);
    ex.counts.states = seen.len();
    ex
}

fn dfs(m: &Machine, st: MState, seen: &mut HashSet<MState>, path: &mut Vec<Event>, ex: &mut Exploration, budget: usize) {
    if seen.contains(&st) {
        return;
    }
    if seen.len() >= budget {
        ex.truncated = true;
        return;
    }
    seen.insert(st.clone());
    if let Some(o) = m.terminal(&st) {
        ex.record(m, &st, o, path);
        return;
    }
    for t in 0..st.threads.len() {
        if !m.enabled(&st, t) {
            continue;
        }
        let ev = m.event(&st, t);
        path.push(ev);
        match m.step(&st, t) {
            Ok(next) => {
                for n in next {
                    dfs(m, n, seen, path, ex, budget);
                }
            }
            Err(reason) => ex.record(m, &st, Outcome::Stuck { reason }, path),
        }
        path.pop();
    }
}

/// `runs` random schedules.
pub fn sample(m: &Machine, init: &MState, runs: usize, seed: u64) -> Exploration {
    let mut ex = Exploration::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..runs {
        let mut st = init.clone();
        let mut path = Vec::new();
        loop {
            if let Some(o) = m.terminal(&st) {
                ex.record(m, &st, o, &path);
                break;
            }
            if path.len() >= RANDOM_STEP_LIMIT {
                ex.truncated = true;
                break;
            }
            let ready: Vec<usize> = (0..st.threads.len()).filter(|t| m.enabled(&st, *t)).collect();
            let t = ready[rng.gen_range(0..ready.len())];
            path.push(m.event(&st, t));
            ex.counts.states += 1;
            match m.step(&st, t) {
                Ok(mut next) => {
                    let i = rng.gen_range(0..next.len());
                    st = next.swap_remove(i);
                }
                Err(reason) => {
                    ex.record(m, &st, Outcome::Stuck { reason }, &path);
                    break;
                }
            }
        }
    }
    ex
}
