use std::collections::BTreeSet;

use crate::frontend::{BinOp, Expr, MonitorAst, Stmt};

fn operand_ok(ast: &MonitorAst, method: &str, e: &Expr) -> bool {
    match e {
        Expr::Int(_) => true,
        Expr::Var(n) => ast.method(method).is_some_and(|m| m.params.iter().any(|p| &p.name == n)),
        _ => false,
    }
}

fn update_ok(ast: &MonitorAst, method: &str, field: &str, value: &Expr) -> bool {
    if operand_ok(ast, method, value) {
        return true;
    }
    let is_field = |e: &Expr| matches!(e, Expr::Var(n) if n == field);
    match value {
        Expr::Binary(BinOp::Add, a, b) => {
            (is_field(a) && operand_ok(ast, method, b)) || (is_field(b) && operand_ok(ast, method, a))
        }
        Expr::Binary(BinOp::Sub, a, b) => is_field(a) && operand_ok(ast, method, b),
        _ => false,
    }
}

/// Scalar fields whose every update is `f := f ± c` or `f := c`.
pub fn atomic_eligible(ast: &MonitorAst) -> BTreeSet<String> {
    let mut out: BTreeSet<String> =
        ast.fields.iter().filter(|f| !f.ty.is_array()).map(|f| f.name.clone()).collect();
    fn walk(ast: &MonitorAst, method: &str, body: &[Stmt], out: &mut BTreeSet<String>) {
        for s in body {
            match s {
                Stmt::Store { field, index, value } => {
                    if index.is_some() || !update_ok(ast, method, field, value) {
                        out.remove(field);
                    }
                }
                Stmt::Incr { name, index: Some(_), field: true, .. } => {
                    out.remove(name);
                }
                Stmt::While { body, .. } => walk(ast, method, body, out),
                Stmt::If { then_body, else_body, .. } => {
                    walk(ast, method, then_body, out);
                    walk(ast, method, else_body, out);
                }
                _ => {}
            }
        }
    }
    for m in &ast.methods {
        for c in &m.body {
            walk(ast, &m.name, &c.body, &mut out);
        }
    }
    out
}
