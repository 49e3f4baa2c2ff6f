//! Explicit monitors: locks, condition variables and atomic fields.
//!
//! ```text
//! monitor Counter {
//!   lock l1;
//!   condvar cv1 on l1 when n < 3;
//!   atomic int[0..3] n := 0;
//!   inc() {
//!     l1.lock();
//!     __wait_0: if (n.get() < 3) goto __go_0;
//!     cv1.await();
//!     goto __wait_0;
//!     __go_0:
//!     n_pre := n.update(x -> x + 1);
//!     l1.unlock();
//!   }
//! }
//! ```

use std::collections::HashSet;
use std::fmt::Write;

use serde::Serialize;

use crate::frontend::lexer::Tok;
use crate::frontend::parser::{describe, Cursor};
use crate::frontend::pretty::{init_to_string, params_to_string, type_to_string};
use crate::frontend::{expr_to_string, Expr, FieldDecl, Param, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum EStmt {
    Skip,
    Assign { target: String, value: Expr },
    Store { field: String, index: Option<Expr>, value: Expr },
    Goto(String),
    IfGoto(Expr, String),
    Label(String),
    Lock(usize),
    Unlock(usize),
    Await(usize),
    Signal(usize),
    SignalAll(usize),
    /// `target := field.update(var -> body)`; `target` receives the old value.
    Update { target: String, field: String, var: String, body: Expr },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CondVar {
    pub name: String,
    pub lock: usize,
    /// Predicate waited for on this condition variable.
    pub pred: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EField {
    pub decl: FieldDecl,
    pub atomic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EMethod {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<EStmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExplicitMonitor {
    pub name: String,
    pub locks: Vec<String>,
    pub condvars: Vec<CondVar>,
    pub fields: Vec<EField>,
    pub methods: Vec<EMethod>,
}

impl ExplicitMonitor {
    pub fn field(&self, name: &str) -> Option<&EField> {
        self.fields.iter().find(|f| f.decl.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&EMethod> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field_decls(&self) -> Vec<FieldDecl> {
        self.fields.iter().map(|f| f.decl.clone()).collect()
    }
}

pub fn estmt_to_string(s: &EStmt, em: &ExplicitMonitor) -> String {
    let lock = |i: &usize| em.locks.get(*i).cloned().unwrap_or_else(|| format!("l{}", i + 1));
    let cv = |i: &usize| em.condvars.get(*i).map(|c| c.name.clone()).unwrap_or_else(|| format!("cv{}", i + 1));
    match s {
        EStmt::Skip => "skip;".into(),
        EStmt::Assign { target, value } => format!("{target} := {};", expr_to_string(value)),
        EStmt::Store { field, index: Some(i), value } => {
            format!("{field}[{}] := {};", expr_to_string(i), expr_to_string(value))
        }
        EStmt::Store { field, index: None, value } => format!("{field} := {};", expr_to_string(value)),
        EStmt::Goto(l) => format!("goto {l};"),
        EStmt::IfGoto(c, l) => format!("if ({}) goto {l};", expr_to_string(c)),
        EStmt::Label(l) => format!("{l}:"),
        EStmt::Lock(i) => format!("{}.lock();", lock(i)),
        EStmt::Unlock(i) => format!("{}.unlock();", lock(i)),
        EStmt::Await(c) => format!("{}.await();", cv(c)),
        EStmt::Signal(c) => format!("{}.signal();", cv(c)),
        EStmt::SignalAll(c) => format!("{}.signalAll();", cv(c)),
        EStmt::Update { target, field, var, body } => {
            format!("{target} := {field}.update({var} -> {});", expr_to_string(body))
        }
    }
}

/// Deterministic `.emon` text.
pub fn emit(em: &ExplicitMonitor) -> String {
    let mut out = String::new();
    writeln!(out, "monitor {} {{", em.name).unwrap();
    for l in &em.locks {
        writeln!(out, "  lock {l};").unwrap();
    }
    for c in &em.condvars {
        writeln!(out, "  condvar {} on {} when {};", c.name, em.locks[c.lock], expr_to_string(&c.pred)).unwrap();
    }
    for f in &em.fields {
        let d = &f.decl;
        let kw = if f.atomic { "atomic " } else { "" };
        writeln!(out, "  {kw}{} {} := {};", type_to_string(&d.ty), d.name, init_to_string(&d.init, &d.ty)).unwrap();
    }
    for m in &em.methods {
        out.push('\n');
        writeln!(out, "  {}({}) {{", m.name, params_to_string(&m.params)).unwrap();
        for s in &m.body {
            writeln!(out, "    {}", estmt_to_string(s, em)).unwrap();
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn java_expr(e: &Expr) -> String {
    expr_to_string(e).replace(":=", "=")
}

/// Java-like rendering for reading; not parsed back.
pub fn emit_pseudo_java(em: &ExplicitMonitor) -> String {
    let mut out = String::new();
    writeln!(out, "class {} {{", em.name).unwrap();
    for l in &em.locks {
        writeln!(out, "  final Lock {l} = new ReentrantLock();").unwrap();
    }
    for c in &em.condvars {
        writeln!(out, "  final Condition {} = {}.newCondition(); // {}", c.name, em.locks[c.lock], expr_to_string(&c.pred)).unwrap();
    }
    for f in &em.fields {
        let d = &f.decl;
        let init = init_to_string(&d.init, &d.ty);
        match (f.atomic, d.ty.is_array()) {
            (true, _) => writeln!(out, "  final AtomicInteger {} = new AtomicInteger({init});", d.name).unwrap(),
            (false, true) => writeln!(out, "  int[] {} = new int[{}];", d.name, d.ty.len()).unwrap(),
            (false, false) => writeln!(out, "  int {} = {init};", d.name).unwrap(),
        }
    }
    for m in &em.methods {
        out.push('\n');
        let ps: Vec<String> = m.params.iter().map(|p| format!("int {}", p.name)).collect();
        writeln!(out, "  void {}({}) throws InterruptedException {{", m.name, ps.join(", ")).unwrap();
        for s in &m.body {
            let line = match s {
                EStmt::Assign { target, value } => format!("{target} = {};", java_expr(value)),
                EStmt::Store { field, index: Some(i), value } => {
                    format!("{field}[{}] = {};", java_expr(i), java_expr(value))
                }
                EStmt::Store { field, index: None, value } => format!("{field} = {};", java_expr(value)),
                EStmt::Update { target, field, var, body } => {
                    format!("int {target} = {field}.getAndUpdate({var} -> {});", java_expr(body))
                }
                EStmt::Label(l) => format!("{l}:"),
                other => estmt_to_string(other, em),
            };
            writeln!(out, "    {line}").unwrap();
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

struct EParser {
    c: Cursor,
}

/// Parse `.emon` text.
pub fn parse_explicit(src: &str) -> Result<ExplicitMonitor, ParseError> {
    let mut p = EParser { c: Cursor::new(src)? };
    let em = p.monitor()?;
    check(&em)?;
    Ok(em)
}

impl EParser {
    fn monitor(&mut self) -> Result<ExplicitMonitor, ParseError> {
        let c = &mut self.c;
        c.expect_kw("monitor")?;
        let name = c.ident()?;
        c.expect_sym("{")?;
        let mut em = ExplicitMonitor { name, locks: vec![], condvars: vec![], fields: vec![], methods: vec![] };
        let mut seen = HashSet::new();
        while !self.c.is_sym("}") {
            let (line, col) = self.c.here();
            let dup = |n: &str| ParseError::Duplicate { line, col, name: n.to_string() };
            if self.c.is_kw("lock") {
                self.c.bump();
                let l = self.c.ident()?;
                if !seen.insert(l.clone()) {
                    return Err(dup(&l));
                }
                self.c.expect_sym(";")?;
                em.locks.push(l);
            } else if self.c.is_kw("condvar") {
                self.c.bump();
                let n = self.c.ident()?;
                if !seen.insert(n.clone()) {
                    return Err(dup(&n));
                }
                self.c.expect_kw("on")?;
                let (ll, lc) = self.c.here();
                let l = self.c.ident()?;
                let lock = em.locks.iter().position(|x| *x == l).ok_or(ParseError::Undeclared { line: ll, col: lc, name: l })?;
                self.c.expect_kw("when")?;
                let pred = self.c.expr()?;
                self.c.expect_sym(";")?;
                em.condvars.push(CondVar { name: n, lock, pred });
            } else if self.c.is_kw("atomic") || self.c.is_kw("int") || self.c.is_kw("array") {
                let atomic = self.c.is_kw("atomic");
                if atomic {
                    self.c.bump();
                }
                let ty = self.c.field_type()?;
                let n = self.c.ident()?;
                if !seen.insert(n.clone()) {
                    return Err(dup(&n));
                }
                let init = self.c.field_init(&n, &ty)?;
                em.fields.push(EField { decl: FieldDecl { name: n, ty, init }, atomic });
            } else if matches!(self.c.peek(), Tok::Ident(_)) {
                let n = self.c.ident()?;
                if !seen.insert(n.clone()) {
                    return Err(dup(&n));
                }
                let params = self.c.params()?;
                self.c.expect_sym("{")?;
                let mut body = Vec::new();
                while !self.c.is_sym("}") {
                    body.push(self.stmt(&em)?);
                }
                self.c.expect_sym("}")?;
                em.methods.push(EMethod { name: n, params, body });
            } else {
                return self.c.err(format!("expected declaration, found {}", describe(self.c.peek())));
            }
        }
        self.c.expect_sym("}")?;
        if !matches!(self.c.peek(), Tok::Eof) {
            return self.c.err("trailing input after monitor");
        }
        Ok(em)
    }

    fn stmt(&mut self, em: &ExplicitMonitor) -> Result<EStmt, ParseError> {
        let (line, col) = self.c.here();
        let Tok::Ident(word) = self.c.peek().clone() else {
            return self.c.err(format!("expected statement, found {}", describe(self.c.peek())));
        };
        self.c.bump();
        match word.as_str() {
            "skip" => {
                self.c.expect_sym(";")?;
                return Ok(EStmt::Skip);
            }
            "goto" => {
                let l = self.c.ident()?;
                self.c.expect_sym(";")?;
                return Ok(EStmt::Goto(l));
            }
            "if" => {
                self.c.expect_sym("(")?;
                let e = self.c.expr()?;
                self.c.expect_sym(")")?;
                self.c.expect_kw("goto")?;
                let l = self.c.ident()?;
                self.c.expect_sym(";")?;
                return Ok(EStmt::IfGoto(e, l));
            }
            _ => {}
        }
        if self.c.eat_sym(":") {
            return Ok(EStmt::Label(word));
        }
        if self.c.eat_sym(".") {
            let op = self.c.ident()?;
            self.c.expect_sym("(")?;
            self.c.expect_sym(")")?;
            self.c.expect_sym(";")?;
            let lock = em.locks.iter().position(|l| *l == word);
            let cv = em.condvars.iter().position(|c| c.name == word);
            return match (op.as_str(), lock, cv) {
                ("lock", Some(l), _) => Ok(EStmt::Lock(l)),
                ("unlock", Some(l), _) => Ok(EStmt::Unlock(l)),
                ("await", _, Some(c)) => Ok(EStmt::Await(c)),
                ("signal", _, Some(c)) => Ok(EStmt::Signal(c)),
                ("signalAll", _, Some(c)) => Ok(EStmt::SignalAll(c)),
                (_, None, None) => Err(ParseError::Undeclared { line, col, name: word }),
                _ => Err(ParseError::Syntax { line, col, msg: format!("`{op}` not applicable to `{word}`") }),
            };
        }
        let index = if self.c.eat_sym("[") {
            let i = self.c.expr()?;
            self.c.expect_sym("]")?;
            Some(i)
        } else {
            None
        };
        self.c.expect_sym(":=")?;
        if index.is_none()
            && matches!(self.c.peek(), Tok::Ident(_))
            && self.c.peek_at(1) == &Tok::Sym(".")
            && self.c.peek_at(2) == &Tok::Ident("update".into())
        {
            let field = self.c.ident()?;
            self.c.bump();
            self.c.bump();
            self.c.expect_sym("(")?;
            let var = self.c.ident()?;
            self.c.expect_sym("->")?;
            let body = self.c.expr()?;
            self.c.expect_sym(")")?;
            self.c.expect_sym(";")?;
            return Ok(EStmt::Update { target: word, field, var, body });
        }
        let value = self.c.expr()?;
        self.c.expect_sym(";")?;
        if index.is_some() || em.field(&word).is_some() {
            Ok(EStmt::Store { field: word, index, value })
        } else {
            Ok(EStmt::Assign { target: word, value })
        }
    }
}

/// Labels resolve within their method; update targets are atomic fields.
fn check(em: &ExplicitMonitor) -> Result<(), ParseError> {
    for m in &em.methods {
        let labels: HashSet<&str> = m
            .body
            .iter()
            .filter_map(|s| if let EStmt::Label(l) = s { Some(l.as_str()) } else { None })
            .collect();
        for s in &m.body {
            match s {
                EStmt::Goto(l) | EStmt::IfGoto(_, l) if !labels.contains(l.as_str()) => {
                    return Err(ParseError::UnresolvedLabel { line: 0, col: 0, name: l.clone() });
                }
                EStmt::Update { field, .. } if !em.field(field).is_some_and(|f| f.atomic) => {
                    return Err(ParseError::Undeclared { line: 0, col: 0, name: field.clone() });
                }
                EStmt::Store { field, .. } if em.field(field).is_none() => {
                    return Err(ParseError::Undeclared { line: 0, col: 0, name: field.clone() });
                }
                _ => {}
            }
        }
    }
    Ok(())
}
