//! Lowering of surface forms to the core statement set.

use std::collections::HashSet;

use super::ast::*;

pub fn desugar(ast: &MonitorAst) -> MonitorAst {
    let mut out = ast.clone();
    for m in &mut out.methods {
        for c in &mut m.body {
            if c.guard.is_none() {
                c.guard = Some(Expr::Bool(true));
            }
            let mut taken = HashSet::new();
            collect_labels(&c.body, &mut taken);
            let mut lw = Lowerer { taken, next: 0 };
            let mut body = Vec::new();
            lw.lower(&c.body, &mut body);
            c.body = body;
        }
    }
    out
}

fn collect_labels(body: &[Stmt], out: &mut HashSet<String>) {
    for s in body {
        match s {
            Stmt::Label(l) => {
                out.insert(l.clone());
            }
            Stmt::While { body, .. } => collect_labels(body, out),
            Stmt::If { then_body, else_body, .. } => {
                collect_labels(then_body, out);
                collect_labels(else_body, out);
            }
            _ => {}
        }
    }
}

struct Lowerer {
    taken: HashSet<String>,
    next: usize,
}

impl Lowerer {
    fn fresh(&mut self, stem: &str) -> String {
        loop {
            let l = format!("__{stem}{}", self.next);
            self.next += 1;
            if self.taken.insert(l.clone()) {
                return l;
            }
        }
    }

    fn lower(&mut self, body: &[Stmt], out: &mut Vec<Stmt>) {
        for s in body {
            match s {
                Stmt::Incr { name, index, delta, field } => {
                    let cur = match index {
                        Some(i) => Expr::Index(name.clone(), Box::new(i.clone())),
                        None => Expr::Var(name.clone()),
                    };
                    let value = if *delta >= 0 {
                        Expr::bin(BinOp::Add, cur, Expr::Int(*delta))
                    } else {
                        Expr::bin(BinOp::Sub, cur, Expr::Int(-*delta))
                    };
                    if *field {
                        out.push(Stmt::Store { field: name.clone(), index: index.clone(), value });
                    } else {
                        out.push(Stmt::Assign { target: name.clone(), value });
                    }
                }
                Stmt::While { cond, body } => {
                    let head = self.fresh("loop");
                    let done = self.fresh("done");
                    out.push(Stmt::Label(head.clone()));
                    out.push(Stmt::IfGoto(Expr::not(cond.clone()), done.clone()));
                    self.lower(body, out);
                    out.push(Stmt::Goto(head));
                    out.push(Stmt::Label(done));
                }
                Stmt::If { cond, then_body, else_body } => {
                    let end = self.fresh("endif");
                    if else_body.is_empty() {
                        out.push(Stmt::IfGoto(Expr::not(cond.clone()), end.clone()));
                        self.lower(then_body, out);
                    } else {
                        let els = self.fresh("else");
                        out.push(Stmt::IfGoto(Expr::not(cond.clone()), els.clone()));
                        self.lower(then_body, out);
                        out.push(Stmt::Goto(end.clone()));
                        out.push(Stmt::Label(els));
                        self.lower(else_body, out);
                    }
                    out.push(Stmt::Label(end));
                }
                s => out.push(s.clone()),
            }
        }
    }
}
