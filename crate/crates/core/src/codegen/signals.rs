use std::collections::BTreeSet;

use crate::frontend::access::free_fields;
use crate::frontend::{Ccr, Expr, MonitorAst, Stmt};

fn written(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match s {
            Stmt::Store { field, .. } => {
                out.insert(field.clone());
            }
            Stmt::Incr { name, field: true, .. } => {
                out.insert(name.clone());
            }
            Stmt::While { body, .. } => written(body, out),
            Stmt::If { then_body, else_body, .. } => {
                written(then_body, out);
                written(else_body, out);
            }
            _ => {}
        }
    }
}

/// Append `broadcast(p, true)` to every CCR that writes a field read by
/// some waituntil predicate `p`.
pub fn place_signals(ast: &MonitorAst) -> MonitorAst {
    let preds: Vec<(Expr, BTreeSet<String>)> = ast.predicates().into_iter().map(|p| {
        let ff = free_fields(ast, &p);
        (p, ff)
    }).collect();
    let mut out = ast.clone();
    for m in &mut out.methods {
        for Ccr { body, .. } in &mut m.body {
            let mut w = BTreeSet::new();
            written(body, &mut w);
            for (p, ff) in &preds {
                if !ff.is_disjoint(&w) {
                    body.push(Stmt::Signal { pred: p.clone(), cond: Expr::Bool(true), all: true });
                }
            }
        }
    }
    out
}
