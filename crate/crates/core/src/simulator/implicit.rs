//! Implicit histories: whole CCRs executed atomically when their guard holds.

use serde::Serialize;

use super::workload::{Workload, WorkloadError};
use crate::exec::Program;
use crate::fdg::{build_cfg, FdgError};
use crate::frontend::MonitorAst;

/// One operation bound to a method index and its arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundOp {
    pub method: usize,
    pub args: Vec<i64>,
}

/// Observable state: fields, per-thread progress and per-operation locals
/// of finished operations (in the implicit method's frame order).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Snapshot {
    pub fields: Vec<i64>,
    /// `(operation, ccr)` the thread is at; `(ops, 0)` once finished.
    pub progress: Vec<(usize, usize)>,
    pub results: Vec<Vec<Vec<i64>>>,
}

impl Snapshot {
    pub fn finished(&self, ops: &[Vec<BoundOp>]) -> bool {
        self.progress.iter().zip(ops).all(|(p, o)| p.0 == o.len())
    }
}

/// `(thread, ccr index)` events.
pub type ImplicitHistory = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "end", rename_all = "lowercase")]
pub enum ImplicitEnd {
    Done { state: Snapshot },
    Blocked { state: Snapshot },
    Error { message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplicitRun {
    pub history: ImplicitHistory,
    #[serde(flatten)]
    pub end: ImplicitEnd,
}

#[derive(Debug, Clone)]
pub struct Implicit {
    pub prog: Program,
}

#[derive(Clone)]
struct ThreadState {
    op: usize,
    ccr: usize,
    locals: Vec<i64>,
}

impl Implicit {
    pub fn new(ast: &MonitorAst) -> Result<Implicit, FdgError> {
        let cfgs = ast.methods.iter().map(build_cfg).collect::<Result<Vec<_>, _>>()?;
        Ok(Implicit { prog: Program::new(ast, &cfgs) })
    }

    /// Resolve and validate a workload's operations.
    pub fn bind(&self, w: &Workload) -> Result<Vec<Vec<BoundOp>>, WorkloadError> {
        w.threads
            .iter()
            .map(|ops| {
                ops.iter()
                    .map(|op| {
                        let m = self.prog.method_index(&op.method).ok_or_else(|| WorkloadError::Method(op.method.clone()))?;
                        let frame = &self.prog.methods[m].frame;
                        if frame.params.len() != op.args.len() {
                            return Err(WorkloadError::Arity { method: op.method.clone(), expected: frame.params.len(), got: op.args.len() });
                        }
                        if let Some((v, _)) = op.args.iter().zip(&frame.params).find(|(v, r)| !r.contains(**v)) {
                            return Err(WorkloadError::ArgDomain { method: op.method.clone(), value: *v });
                        }
                        Ok(BoundOp { method: m, args: op.args.clone() })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn initial(&self, w: &Workload) -> Result<Vec<i64>, WorkloadError> {
        w.initial_state(&self.prog.layout, &self.prog.init)
    }

    fn start(&self, ops: &[Vec<BoundOp>]) -> Vec<ThreadState> {
        ops.iter()
            .map(|o| ThreadState { op: 0, ccr: 0, locals: o.first().map(|b| self.prog.methods[b.method].frame.enter(&b.args)).unwrap_or_default() })
            .collect()
    }

    fn snapshot(fields: &[i64], ts: &[ThreadState], results: &[Vec<Vec<i64>>]) -> Snapshot {
        Snapshot { fields: fields.to_vec(), progress: ts.iter().map(|t| (t.op, t.ccr)).collect(), results: results.to_vec() }
    }

    /// Try thread `t`'s next CCR. `Ok(false)` when its guard is false.
    fn advance(
        &self,
        ops: &[Vec<BoundOp>],
        fields: &mut [i64],
        ts: &mut [ThreadState],
        results: &mut [Vec<Vec<i64>>],
        t: usize,
    ) -> Result<bool, String> {
        let th = &mut ts[t];
        let op = &ops[t][th.op];
        let meth = &self.prog.methods[op.method];
        if !meth.ccr_entry.is_empty() && !self.prog.run_ccr(op.method, th.ccr, fields, &mut th.locals, true).map_err(|e| e.to_string())? {
            return Ok(false);
        }
        th.ccr += 1;
        if th.ccr >= meth.ccr_entry.len() {
            results[t].push(std::mem::take(&mut th.locals));
            th.op += 1;
            th.ccr = 0;
            if let Some(b) = ops[t].get(th.op) {
                th.locals = self.prog.methods[b.method].frame.enter(&b.args);
            }
        }
        Ok(true)
    }

    /// Execute a given history; blocked if a guard is false at its turn.
    pub fn run(&self, ops: &[Vec<BoundOp>], init: &[i64], h: &[(usize, usize)]) -> ImplicitEnd {
        let mut fields = init.to_vec();
        let mut ts = self.start(ops);
        let mut results = vec![Vec::new(); ops.len()];
        for &(t, k) in h {
            if t >= ops.len() || ts[t].op >= ops[t].len() || ts[t].ccr != k {
                return ImplicitEnd::Error { message: format!("event ({t}, {k}) breaks program order") };
            }
            match self.advance(ops, &mut fields, &mut ts, &mut results, t) {
                Ok(true) => {}
                Ok(false) => return ImplicitEnd::Blocked { state: Self::snapshot(&fields, &ts, &results) },
                Err(message) => return ImplicitEnd::Error { message },
            }
        }
        ImplicitEnd::Done { state: Self::snapshot(&fields, &ts, &results) }
    }

    /// Every maximal history; the flag is set when `limit` cut enumeration short.
    pub fn enumerate(&self, ops: &[Vec<BoundOp>], init: &[i64], limit: usize) -> (Vec<ImplicitRun>, bool) {
        let mut out = Vec::new();
        let mut truncated = false;
        let mut hist = Vec::new();
        let results = vec![Vec::new(); ops.len()];
        self.dfs(ops, init.to_vec(), self.start(ops), results, &mut hist, &mut out, limit, &mut truncated);
        (out, truncated)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        ops: &[Vec<BoundOp>],
        fields: Vec<i64>,
        ts: Vec<ThreadState>,
        results: Vec<Vec<Vec<i64>>>,
        hist: &mut ImplicitHistory,
        out: &mut Vec<ImplicitRun>,
        limit: usize,
        truncated: &mut bool,
    ) {
        if out.len() >= limit {
            *truncated = true;
            return;
        }
        let mut moved = false;
        for t in 0..ops.len() {
            if ts[t].op >= ops[t].len() {
                continue;
            }
            let (mut f2, mut t2, mut r2) = (fields.clone(), ts.clone(), results.clone());
            let k = ts[t].ccr;
            match self.advance(ops, &mut f2, &mut t2, &mut r2, t) {
                Ok(false) => continue,
                Ok(true) => {
                    moved = true;
                    hist.push((t, k));
                    self.dfs(ops, f2, t2, r2, hist, out, limit, truncated);
                    hist.pop();
                }
                Err(message) => {
                    moved = true;
                    let mut h = hist.clone();
                    h.push((t, k));
                    out.push(ImplicitRun { history: h, end: ImplicitEnd::Error { message } });
                }
            }
        }
        if !moved {
            let state = Self::snapshot(&fields, &ts, &results);
            let end = if state.finished(ops) { ImplicitEnd::Done { state } } else { ImplicitEnd::Blocked { state } };
            out.push(ImplicitRun { history: hist.clone(), end });
        }
    }
}
