//! Read/write access paths of statements and predicates.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::pretty::expr_to_string;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Index {
    Const(i64),
    /// Printed form of a non-constant index expression.
    Sym(String),
}

/// Depth-1 path: a monitor field, plus a cell index for arrays.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AccessPath {
    pub base: String,
    pub index: Option<Index>,
}

impl AccessPath {
    pub fn scalar(base: &str) -> Self {
        AccessPath { base: base.to_string(), index: None }
    }

    pub fn cell(base: &str, idx: &Expr) -> Self {
        let index = match idx {
            Expr::Int(v) => Index::Const(*v),
            e => Index::Sym(expr_to_string(e)),
        };
        AccessPath { base: base.to_string(), index: Some(index) }
    }

    /// May the two paths denote the same location (syntactically)?
    pub fn may_alias(&self, other: &AccessPath) -> bool {
        if self.base != other.base {
            return false;
        }
        match (&self.index, &other.index) {
            (Some(Index::Const(a)), Some(Index::Const(b))) => a == b,
            _ => true,
        }
    }
}

impl fmt::Display for AccessPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            None => write!(f, "{}", self.base),
            Some(Index::Const(v)) => write!(f, "{}[{v}]", self.base),
            Some(Index::Sym(s)) => write!(f, "{}[{s}]", self.base),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RwSets {
    pub reads: BTreeSet<AccessPath>,
    pub writes: BTreeSet<AccessPath>,
}

impl RwSets {
    pub fn union(&mut self, o: &RwSets) {
        self.reads.extend(o.reads.iter().cloned());
        self.writes.extend(o.writes.iter().cloned());
    }

    pub fn all(&self) -> impl Iterator<Item = &AccessPath> {
        self.reads.iter().chain(self.writes.iter())
    }

    pub fn fields_written(&self) -> BTreeSet<String> {
        self.writes.iter().map(|p| p.base.clone()).collect()
    }
}

fn expr_reads(ast: &MonitorAst, e: &Expr, out: &mut BTreeSet<AccessPath>) {
    e.visit(&mut |n, idx| {
        if ast.field(n).is_some() {
            out.insert(match idx {
                Some(i) => AccessPath::cell(n, i),
                None => AccessPath::scalar(n),
            });
        }
    });
}

/// Fields read in a predicate.
pub fn predicate_rw(ast: &MonitorAst, p: &Expr) -> RwSets {
    let mut rw = RwSets::default();
    expr_reads(ast, p, &mut rw.reads);
    rw
}

/// Access paths of a core statement; locals are excluded.
pub fn read_write_sets(ast: &MonitorAst, s: &Stmt) -> RwSets {
    let mut rw = RwSets::default();
    match s {
        Stmt::Assign { value, .. } => expr_reads(ast, value, &mut rw.reads),
        Stmt::Store { field, index, value } => {
            expr_reads(ast, value, &mut rw.reads);
            match index {
                Some(i) => {
                    expr_reads(ast, i, &mut rw.reads);
                    rw.writes.insert(AccessPath::cell(field, i));
                }
                None => {
                    rw.writes.insert(AccessPath::scalar(field));
                }
            }
        }
        Stmt::IfGoto(c, _) => expr_reads(ast, c, &mut rw.reads),
        Stmt::Signal { cond, .. } => expr_reads(ast, cond, &mut rw.reads),
        Stmt::Incr { name, index, field, .. } => {
            if *field {
                let p = match index {
                    Some(i) => {
                        expr_reads(ast, i, &mut rw.reads);
                        AccessPath::cell(name, i)
                    }
                    None => AccessPath::scalar(name),
                };
                rw.reads.insert(p.clone());
                rw.writes.insert(p);
            }
        }
        Stmt::While { cond, body } => {
            expr_reads(ast, cond, &mut rw.reads);
            for b in body {
                rw.union(&read_write_sets(ast, b));
            }
        }
        Stmt::If { cond, then_body, else_body } => {
            expr_reads(ast, cond, &mut rw.reads);
            for b in then_body.iter().chain(else_body) {
                rw.union(&read_write_sets(ast, b));
            }
        }
        Stmt::Skip | Stmt::Goto(_) | Stmt::Label(_) => {}
    }
    rw
}

/// Free fields of an expression (names only).
pub fn free_fields(ast: &MonitorAst, e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.visit(&mut |n, _| {
        if ast.field(n).is_some() {
            out.insert(n.to_string());
        }
    });
    out
}
