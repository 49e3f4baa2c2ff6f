//! Lowering of a signaled implicit monitor to lock/condvar/atomic code.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::explicit::{CondVar, EField, EMethod, EStmt, ExplicitMonitor};
use crate::fdg::{Fdg, Instr};
use crate::frontend::{expr_to_string, Expr, MonitorAst, Stmt};
use crate::maxsat::Protocol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("protocol does not match the fragment graph: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone)]
pub struct Instrumented {
    pub monitor: ExplicitMonitor,
    /// Per method and emitted statement: fragment the statement came from.
    pub origin: Vec<Vec<Option<usize>>>,
}

fn fresh(base: &str, taken: &HashSet<String>) -> String {
    let mut n = base.to_string();
    while taken.contains(&n) {
        n.push('_');
    }
    n
}

struct Emitter<'a> {
    atomics: &'a BTreeSet<String>,
    out: Vec<EStmt>,
    origin: Vec<Option<usize>>,
}

impl Emitter<'_> {
    fn push(&mut self, s: EStmt, from: Option<usize>) {
        self.out.push(s);
        self.origin.push(from);
    }

    fn acq(&mut self, locks: impl IntoIterator<Item = usize>) {
        let mut v: Vec<usize> = locks.into_iter().collect();
        v.sort();
        for l in v {
            self.push(EStmt::Lock(l), None);
        }
    }

    fn rel(&mut self, locks: impl IntoIterator<Item = usize>) {
        let mut v: Vec<usize> = locks.into_iter().collect();
        v.sort();
        for l in v.into_iter().rev() {
            self.push(EStmt::Unlock(l), None);
        }
    }

    fn transition(&mut self, from: &BTreeSet<usize>, to: &BTreeSet<usize>) {
        self.rel(from.difference(to).copied());
        self.acq(to.difference(from).copied());
    }

    fn rexpr(&self, e: &Expr) -> Expr {
        e.map_vars(&|n| self.atomics.contains(n).then(|| Expr::Get(n.to_string())))
    }
}

/// Instrument `ast` (desugared, signals placed) following `proto`.
pub fn instrument(ast: &MonitorAst, fdg: &Fdg, proto: &Protocol) -> Result<Instrumented, CodegenError> {
    if proto.held.len() != fdg.len() {
        return Err(CodegenError::Mismatch(format!("{} fragments, protocol has {}", fdg.len(), proto.held.len())));
    }
    let preds = ast.predicates();
    let atomics = &proto.atomics;
    let rewrite = |e: &Expr| e.map_vars(&|n| atomics.contains(n).then(|| Expr::Get(n.to_string())));
    let mut condvars = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let lock = proto
            .cv_lock
            .get(i)
            .copied()
            .flatten()
            .ok_or_else(|| CodegenError::Mismatch(format!("no lock for `{}`", expr_to_string(p))))?;
        condvars.push(CondVar { name: format!("cv{}", i + 1), lock, pred: rewrite(p) });
    }
    let fields = ast.fields.iter().map(|f| EField { decl: f.clone(), atomic: atomics.contains(&f.name) }).collect();
    let mut methods = Vec::new();
    let mut origins = Vec::new();
    for (m, decl) in ast.methods.iter().enumerate() {
        let cfg = &fdg.cfgs[m];
        let fo = &fdg.frag_of[m];
        let held = |b: usize| &proto.held[fo[b]];
        let mut taken: HashSet<String> = ast.fields.iter().map(|f| f.name.clone()).collect();
        taken.extend(decl.params.iter().map(|p| p.name.clone()));
        taken.extend(crate::exec::method_locals(decl));
        let bound = fresh("x", &taken);
        let mut e = Emitter { atomics, out: Vec::new(), origin: Vec::new() };
        let mut trampolines: Vec<(usize, usize)> = Vec::new();
        if !cfg.is_empty() {
            e.acq(held(0).iter().copied());
        }
        for b in 0..cfg.len() {
            let blk = &cfg.blocks[b];
            let f = fo[b];
            for l in &blk.labels {
                e.push(EStmt::Label(l.clone()), None);
            }
            let edge_label = |t: usize| format!("__edge_{b}_{t}");
            match &blk.instr {
                Instr::Wait(p) if p.is_true() => {}
                Instr::Wait(p) => {
                    let pi = preds.iter().position(|q| q == p).expect("predicate listed");
                    let lp = condvars[pi].lock;
                    if !held(b).contains(&lp) {
                        return Err(CodegenError::Mismatch(format!("{} waits without holding l{}", fdg.fragments[f].name(), lp + 1)));
                    }
                    let others: Vec<usize> = held(b).iter().copied().filter(|l| *l != lp).collect();
                    let (wait, go) = (format!("__wait_{b}"), format!("__go_{b}"));
                    e.push(EStmt::Label(wait.clone()), None);
                    e.push(EStmt::IfGoto(e.rexpr(p), go.clone()), Some(f));
                    e.rel(others.iter().copied());
                    e.push(EStmt::Await(pi), None);
                    e.acq(others.iter().copied());
                    e.push(EStmt::Goto(wait), None);
                    e.push(EStmt::Label(go), None);
                }
                Instr::Stmt(Stmt::Signal { pred, cond, all }) => match preds.iter().position(|q| q == pred) {
                    None => e.push(EStmt::Skip, Some(f)),
                    Some(pi) => {
                        let lp = condvars[pi].lock;
                        let skip = format!("__nosig_{b}");
                        if !cond.is_true() {
                            e.push(EStmt::IfGoto(Expr::not(e.rexpr(cond)), skip.clone()), Some(f));
                        }
                        let sig = if *all { EStmt::SignalAll(pi) } else { EStmt::Signal(pi) };
                        if held(b).contains(&lp) {
                            e.push(sig, Some(f));
                        } else {
                            let higher: Vec<usize> = held(b).iter().copied().filter(|l| *l > lp).collect();
                            e.rel(higher.iter().copied());
                            e.push(EStmt::Lock(lp), None);
                            e.push(sig, None);
                            e.push(EStmt::Unlock(lp), None);
                            e.acq(higher.iter().copied());
                        }
                        if !cond.is_true() {
                            e.push(EStmt::Label(skip), None);
                        }
                    }
                },
                Instr::Stmt(s) => {
                    let jump = cfg.jump_target(b).filter(|t| fo[*t] != f);
                    let target = |l: &String| match jump {
                        Some(t) => edge_label(t),
                        None => l.clone(),
                    };
                    let st = match s {
                        Stmt::Skip => EStmt::Skip,
                        Stmt::Assign { target, value } => EStmt::Assign { target: target.clone(), value: e.rexpr(value) },
                        Stmt::Store { field, index: None, value } if atomics.contains(field) => EStmt::Update {
                            target: fresh(&format!("{field}_pre"), &taken),
                            field: field.clone(),
                            var: bound.clone(),
                            body: value.map_vars(&|n| (n == field).then(|| Expr::Var(bound.clone()))),
                        },
                        Stmt::Store { field, index, value } => EStmt::Store {
                            field: field.clone(),
                            index: index.as_ref().map(|i| e.rexpr(i)),
                            value: e.rexpr(value),
                        },
                        Stmt::Goto(l) => EStmt::Goto(target(l)),
                        Stmt::IfGoto(c, l) => EStmt::IfGoto(e.rexpr(c), target(l)),
                        other => return Err(CodegenError::Mismatch(format!("unexpected statement {other:?}"))),
                    };
                    e.push(st, Some(f));
                    if let Some(t) = jump {
                        trampolines.push((b, t));
                    }
                }
            }
            continue_fallthrough(&mut e, cfg, fo, proto, b);
        }
        if !trampolines.is_empty() {
            e.push(EStmt::Goto("__done".into()), None);
            for (b, t) in trampolines {
                e.push(EStmt::Label(format!("__edge_{b}_{t}")), None);
                e.transition(held(b), held(t));
                let l = cfg.blocks[t].labels.first().cloned().expect("jump target has a label");
                e.push(EStmt::Goto(l), None);
            }
            e.push(EStmt::Label("__done".into()), None);
        }
        methods.push(EMethod { name: decl.name.clone(), params: decl.params.clone(), body: e.out });
        origins.push(e.origin);
    }
    let locks = (1..=proto.locks).map(|i| format!("l{i}")).collect();
    let monitor = ExplicitMonitor { name: ast.name.clone(), locks, condvars, fields, methods };
    Ok(Instrumented { monitor, origin: origins })
}

/// Lock transitions on the fallthrough edge out of `b`, or the final
/// release when `b` ends the method.
fn continue_fallthrough(e: &mut Emitter, cfg: &crate::fdg::Cfg, fo: &[usize], proto: &Protocol, b: usize) {
    let held = |x: usize| &proto.held[fo[x]];
    let ends = cfg.succs[b].is_empty();
    match cfg.fallthrough(b).filter(|n| cfg.succs[b].contains(n)) {
        Some(n) if fo[n] != fo[b] => {
            if cfg.blocks[n].ccr != cfg.blocks[b].ccr {
                e.rel(held(b).iter().copied());
                e.push(EStmt::Label(format!("__ccr{}", cfg.blocks[n].ccr)), None);
                e.acq(held(n).iter().copied());
            } else {
                e.transition(held(b), held(n));
            }
        }
        Some(_) => {}
        None if ends => e.rel(held(b).iter().copied()),
        None => {}
    }
}
