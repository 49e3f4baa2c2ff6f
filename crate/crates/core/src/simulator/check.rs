//! Implicit against explicit: concretization and final-state matching.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::explore::{explore, sample, Counts, Exploration, Witness, DEFAULT_STATE_BUDGET};
use super::implicit::{BoundOp, Implicit, ImplicitEnd, ImplicitHistory, Snapshot};
use super::machine::{Event, MState, Machine, Outcome, Status};
use super::workload::{Mode, Workload, WorkloadError};
use crate::codegen::ExplicitMonitor;
use crate::fdg::FdgError;
use crate::frontend::MonitorAst;

const HISTORY_LIMIT: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Fdg(#[from] FdgError),
    #[error("explicit monitor: {0}")]
    Explicit(String),
    #[error("field layouts differ: implicit has {0}, explicit has {1}")]
    Layout(String, String),
}

/// An implicit monitor, its explicit counterpart and one workload.
#[derive(Debug, Clone)]
pub struct Harness {
    pub implicit: Implicit,
    pub machine: Machine,
    pub ops: Vec<Vec<BoundOp>>,
    pub init: Vec<i64>,
    pub mode: Mode,
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub reason: String,
    /// Implicit history as `method#ccr@thread` events.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub implicit: Vec<String>,
    pub explicit: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub pass: bool,
    pub truncated: bool,
    pub implicit: ImplicitSummary,
    pub sequential: Condition,
    pub interleaved: Condition,
    pub verdicts: Counts,
    pub failures: Vec<Witness>,
    pub final_states: Vec<Value>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ImplicitSummary {
    pub histories: usize,
    pub completed: usize,
    pub blocked: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Condition {
    pub checked: usize,
    pub pass: bool,
    pub counterexamples: Vec<Mismatch>,
}

impl Harness {
    pub fn new(ast: &MonitorAst, em: &ExplicitMonitor, w: &Workload) -> Result<Harness, CheckError> {
        let implicit = Implicit::new(ast)?;
        let ops = implicit.bind(w)?;
        let init = implicit.initial(w)?;
        let mut machine = Machine::new(em).map_err(CheckError::Explicit)?;
        let shape = |l: &crate::exec::Layout| l.fields.iter().map(|f| format!("{}[{}]", f.name, f.len)).collect::<Vec<_>>().join(",");
        if shape(&implicit.prog.layout) != shape(&machine.layout) {
            return Err(CheckError::Layout(shape(&implicit.prog.layout), shape(&machine.layout)));
        }
        let names: Vec<(String, Vec<String>)> = implicit.prog.methods.iter().map(|m| (m.name.clone(), m.frame.names.clone())).collect();
        for (name, _) in &names {
            if machine.method_index(name).is_none() {
                return Err(CheckError::Explicit(format!("missing method `{name}`")));
            }
        }
        let observed: Vec<(String, Vec<String>)> = (0..em.methods.len())
            .map(|m| {
                let n = machine.method_name(m).to_string();
                let want = names.iter().find(|(k, _)| *k == n).map(|(_, v)| v.clone()).unwrap_or_default();
                (n, want)
            })
            .collect();
        machine.set_observed(&observed).map_err(CheckError::Explicit)?;
        let work: Vec<Vec<(String, Vec<i64>)>> = w.threads.iter().map(|th| th.iter().map(|o| (o.method.clone(), o.args.clone())).collect()).collect();
        machine.set_workload(&work).map_err(CheckError::Explicit)?;
        Ok(Harness { implicit, machine, ops, init, mode: w.mode })
    }

    pub fn start(&self) -> MState {
        self.machine.start(&self.init)
    }

    fn history_text(&self, h: &ImplicitHistory) -> Vec<String> {
        let mut at = vec![0usize; self.ops.len()];
        h.iter()
            .map(|&(t, k)| {
                let Some(op) = self.ops[t].get(at[t]) else { return format!("?#{k}@t{t}") };
                let m = &self.implicit.prog.methods[op.method];
                if k + 1 >= m.ccr_entry.len() {
                    at[t] += 1;
                }
                format!("{}#{k}@t{t}", m.name)
            })
            .collect()
    }

    fn trace_text(&self, tr: &[Event]) -> Vec<String> {
        tr.iter().map(|e| self.machine.statement(e)).collect()
    }

    /// Sequential explicit history of an implicit one: each CCR's code runs
    /// contiguously on its thread.
    pub fn concretize(&self, h: &[(usize, usize)]) -> Result<(Vec<Event>, MState), (String, Vec<Event>)> {
        let mut st = self.start();
        let mut trace = Vec::new();
        for &(t, k) in h {
            if st.threads[t].status == Status::Done {
                return Err((format!("thread {t} has no CCR {k} left"), trace));
            }
            if let Err(e) = self.machine.run_solo(&mut st, t, &mut trace) {
                return Err((e, trace));
            }
        }
        Ok((trace, st))
    }

    pub fn explore(&self, budget: usize) -> Exploration {
        let init = self.start();
        match self.mode {
            Mode::Exhaustive => explore(&self.machine, &init, budget),
            Mode::Random { runs, seed } => sample(&self.machine, &init, runs, seed.unwrap_or(0)),
        }
    }

    pub fn render(&self, s: &Snapshot) -> Value {
        let threads: Vec<Value> = s
            .results
            .iter()
            .enumerate()
            .map(|(t, ops)| {
                let ops: Vec<Value> = ops
                    .iter()
                    .enumerate()
                    .map(|(i, vals)| {
                        let m = &self.implicit.prog.methods[self.ops[t][i].method];
                        let locals: serde_json::Map<String, Value> = m.frame.names.iter().cloned().zip(vals.iter().map(|v| json!(v))).collect();
                        json!({ "method": m.name, "locals": locals })
                    })
                    .collect();
                json!(ops)
            })
            .collect();
        json!({ "fields": self.implicit.prog.layout.to_json(&s.fields), "threads": threads })
    }

    /// Both correctness conditions plus deadlock/stuck freedom.
    pub fn check(&self, budget: usize) -> Report {
        let (runs, cut) = self.implicit.enumerate(&self.ops, &self.init, HISTORY_LIMIT);
        let mut summary = ImplicitSummary { histories: runs.len(), ..Default::default() };
        let mut done = BTreeSet::new();
        let mut blocked = BTreeSet::new();
        let mut seq = Condition::default();
        for run in &runs {
            match &run.end {
                ImplicitEnd::Done { state } => {
                    summary.completed += 1;
                    done.insert(state.clone());
                    seq.checked += 1;
                    let bad = match self.concretize(&run.history) {
                        Err((reason, tr)) => Some((reason, tr)),
                        Ok((tr, st)) => match self.machine.terminal(&st) {
                            Some(Outcome::Final) if self.machine.snapshot(&st) == *state => None,
                            Some(Outcome::Final) => Some(("final state differs".to_string(), tr)),
                            other => Some((format!("concretization ends as {other:?}"), tr)),
                        },
                    };
                    if let Some((reason, tr)) = bad {
                        if seq.counterexamples.len() < 8 {
                            seq.counterexamples.push(Mismatch { reason, implicit: self.history_text(&run.history), explicit: self.trace_text(&tr) });
                        }
                    }
                }
                ImplicitEnd::Blocked { state } => {
                    summary.blocked += 1;
                    blocked.insert(state.clone());
                }
                ImplicitEnd::Error { message } => {
                    if summary.errors.len() < 8 {
                        summary.errors.push(format!("{}: {message}", self.history_text(&run.history).join(" ")));
                    }
                }
            }
        }
        seq.pass = seq.counterexamples.is_empty();
        let ex = self.explore(budget);
        let mut inter = Condition::default();
        for (snap, tr) in &ex.finals {
            inter.checked += 1;
            if !done.contains(snap) && inter.counterexamples.len() < 8 {
                inter.counterexamples.push(Mismatch { reason: "final state matches no implicit history".into(), implicit: vec![], explicit: self.trace_text(tr) });
            }
        }
        for (snap, tr) in &ex.blocked {
            inter.checked += 1;
            if !blocked.contains(snap) && inter.counterexamples.len() < 8 {
                inter.counterexamples.push(Mismatch { reason: "blocked state matches no blocked implicit history".into(), implicit: vec![], explicit: self.trace_text(tr) });
            }
        }
        inter.pass = inter.counterexamples.is_empty();
        let pass = seq.pass && inter.pass && ex.failures.is_empty() && summary.errors.is_empty();
        Report {
            pass,
            truncated: cut || ex.truncated,
            implicit: summary,
            sequential: seq,
            interleaved: inter,
            verdicts: ex.counts.clone(),
            failures: ex.failures.clone(),
            final_states: ex.finals.keys().map(|s| self.render(s)).collect(),
        }
    }
}

/// One-call form of [`Harness::check`].
pub fn check_correctness(ast: &MonitorAst, em: &ExplicitMonitor, w: &Workload) -> Result<Report, CheckError> {
    Ok(Harness::new(ast, em, w)?.check(DEFAULT_STATE_BUDGET))
}
