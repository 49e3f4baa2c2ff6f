//! Syntax tree for implicit monitors.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Range {
    pub lo: i64,
    pub hi: i64,
}

impl Range {
    pub fn new(lo: i64, hi: i64) -> Self {
        Range { lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn size(&self) -> u64 {
        (self.hi - self.lo + 1).max(0) as u64
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum FieldType {
    Int(Range),
    Array { len: usize, elem: Range },
}

impl FieldType {
    pub fn elem(&self) -> Range {
        match self {
            FieldType::Int(r) => *r,
            FieldType::Array { elem, .. } => *elem,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FieldType::Int(_) => 1,
            FieldType::Array { len, .. } => *len,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, FieldType::Array { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: FieldType,
    /// One value per cell (length 1 for scalars).
    pub init: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Param {
    pub name: String,
    pub range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    /// Field, parameter or local.
    Var(String),
    /// Array cell `f[e]`.
    Index(String, Box<Expr>),
    /// Atomic read `f.get()`; only produced by instrumentation.
    Get(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    /// Visit every variable-like leaf: `(name, index expr if any)`.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a str, Option<&'a Expr>)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(n) | Expr::Get(n) => f(n, None),
            Expr::Index(n, i) => {
                f(n, Some(i));
                i.visit(f);
            }
            Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Rename/replace variable leaves.
    pub fn map_vars(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(n) => f(n).unwrap_or_else(|| self.clone()),
            Expr::Index(n, i) => Expr::Index(n.clone(), Box::new(i.map_vars(f))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_vars(f))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            _ => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Stmt {
    Skip,
    /// Local assignment.
    Assign { target: String, value: Expr },
    /// Field store, scalar or array cell.
    Store { field: String, index: Option<Expr>, value: Expr },
    Goto(String),
    IfGoto(Expr, String),
    Label(String),
    /// `signal(p, c)` / `broadcast(p, c)`; `p` names the waituntil predicate.
    Signal { pred: Expr, cond: Expr, all: bool },
    /// `x++` / `x--` on a field, cell or local; removed by desugaring.
    Incr { name: String, index: Option<Expr>, delta: i64, field: bool },
    While { cond: Expr, body: Vec<Stmt> },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
}

impl Stmt {
    pub fn is_core(&self) -> bool {
        !matches!(self, Stmt::Incr { .. } | Stmt::While { .. } | Stmt::If { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Ccr {
    /// `None` until desugaring inserts `waituntil(true)`.
    pub guard: Option<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Ccr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MonitorAst {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
}

impl MonitorAst {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Waituntil predicates in order of first appearance, excluding `true`.
    pub fn predicates(&self) -> Vec<Expr> {
        let mut out: Vec<Expr> = Vec::new();
        for m in &self.methods {
            for c in &m.body {
                if let Some(g) = &c.guard {
                    if !g.is_true() && !out.contains(g) {
                        out.push(g.clone());
                    }
                }
            }
        }
        out
    }
}
