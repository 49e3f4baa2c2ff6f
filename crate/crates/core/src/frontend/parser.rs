//! Recursive-descent parser for `.imon` sources.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;

pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Cursor { toks: lex(src)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax { line, col, msg: msg.into() })
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    pub(crate) fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    pub(crate) fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            t => self.err(format!("expected integer, found {}", describe(&t))),
        }
    }

    /// `int[lo..hi]`
    pub(crate) fn int_range(&mut self) -> Result<Range, ParseError> {
        self.expect_kw("int")?;
        self.expect_sym("[")?;
        let lo = self.int()?;
        self.expect_sym("..")?;
        let hi = self.int()?;
        self.expect_sym("]")?;
        if lo > hi {
            return self.err(format!("empty range [{lo}..{hi}]"));
        }
        Ok(Range::new(lo, hi))
    }

    pub(crate) fn field_type(&mut self) -> Result<FieldType, ParseError> {
        if self.is_kw("array") {
            self.bump();
            self.expect_sym("[")?;
            let n = self.int()?;
            if n <= 0 {
                return self.err("array length must be positive");
            }
            self.expect_sym("]")?;
            self.expect_kw("of")?;
            let elem = self.int_range()?;
            Ok(FieldType::Array { len: n as usize, elem })
        } else {
            Ok(FieldType::Int(self.int_range()?))
        }
    }

    /// `:= c` or `:= [c, ...]`, checked against the domain.
    pub(crate) fn field_init(&mut self, name: &str, ty: &FieldType) -> Result<Vec<i64>, ParseError> {
        self.expect_sym(":=")?;
        let (line, col) = self.here();
        let vals = if self.eat_sym("[") {
            let mut v = vec![self.int()?];
            while self.eat_sym(",") {
                v.push(self.int()?);
            }
            self.expect_sym("]")?;
            if v.len() != ty.len() || !ty.is_array() {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("initializer of `{name}` has {} cells, expected {}", v.len(), ty.len()),
                });
            }
            v
        } else {
            vec![self.int()?; ty.len()]
        };
        let r = ty.elem();
        if let Some(bad) = vals.iter().find(|v| !r.contains(**v)) {
            return Err(ParseError::InitOutOfDomain { line, col, name: name.to_string(), value: *bad, lo: r.lo, hi: r.hi });
        }
        self.expect_sym(";")?;
        Ok(vals)
    }

    pub(crate) fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        self.expect_sym("(")?;
        let mut ps = Vec::new();
        if !self.is_sym(")") {
            loop {
                let range = self.int_range()?;
                let name = self.ident()?;
                ps.push(Param { name, range });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(ps)
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        self.expr_prec(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn expr_prec(&mut self, min: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let p = op.precedence();
            if p < min {
                break;
            }
            self.bump();
            let rhs = self.expr_prec(p + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(match e {
                Expr::Int(v) => Expr::Int(-v),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        if self.eat_sym("!") {
            let e = self.unary()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) => {
                self.bump();
                if self.eat_sym("[") {
                    let i = self.expr()?;
                    self.expect_sym("]")?;
                    Ok(Expr::Index(s, Box::new(i)))
                } else if self.is_sym(".") && matches!(self.peek_at(1), Tok::Ident(g) if g == "get") {
                    self.bump();
                    self.bump();
                    self.expect_sym("(")?;
                    self.expect_sym(")")?;
                    Ok(Expr::Get(s))
                } else {
                    Ok(Expr::Var(s))
                }
            }
            t => self.err(format!("expected expression, found {}", describe(&t))),
        }
    }

    /// Index of the `)` matching the `(` at the current position.
    pub(crate) fn matching_paren(&self) -> usize {
        let mut depth = 0usize;
        let mut i = self.pos;
        while i < self.toks.len() {
            match &self.toks[i].tok {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return i;
                    }
                }
                Tok::Eof => return i,
                _ => {}
            }
            i += 1;
        }
        i
    }

    pub(crate) fn token_at(&self, i: usize) -> &Token {
        &self.toks[i]
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }
}

pub(crate) fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

#[derive(Default)]
struct MethodUses {
    reads: Vec<(String, usize, usize, bool)>,
    targets: Vec<(String, usize, usize, bool)>,
}

struct Parser {
    c: Cursor,
    uses: MethodUses,
}

pub fn parse_monitor(src: &str) -> Result<MonitorAst, ParseError> {
    let mut p = Parser { c: Cursor::new(src)?, uses: MethodUses::default() };
    let (ast, uses) = p.monitor()?;
    resolve(ast, uses)
}

impl Parser {
    fn monitor(&mut self) -> Result<(MonitorAst, Vec<(MethodUses, usize, usize)>), ParseError> {
        self.c.expect_kw("monitor")?;
        let name = self.c.ident()?;
        self.c.expect_sym("{")?;
        let mut ast = MonitorAst { name, fields: vec![], methods: vec![] };
        let mut all_uses = Vec::new();
        let mut seen = HashSet::new();
        while !self.c.is_sym("}") {
            let (line, col) = self.c.here();
            if self.c.is_kw("int") || self.c.is_kw("array") {
                let ty = self.c.field_type()?;
                let fname = self.c.ident()?;
                if !seen.insert(fname.clone()) {
                    return Err(ParseError::Duplicate { line, col, name: fname });
                }
                let init = self.c.field_init(&fname, &ty)?;
                ast.fields.push(FieldDecl { name: fname, ty, init });
            } else if matches!(self.c.peek(), Tok::Ident(_)) {
                let mname = self.c.ident()?;
                if !seen.insert(mname.clone()) {
                    return Err(ParseError::Duplicate { line, col, name: mname });
                }
                let params = self.c.params()?;
                self.uses = MethodUses::default();
                let body = self.method_body()?;
                all_uses.push((std::mem::take(&mut self.uses), line, col));
                ast.methods.push(MethodDecl { name: mname, params, body });
            } else {
                return self.c.err(format!("expected field or method, found {}", describe(self.c.peek())));
            }
        }
        self.c.expect_sym("}")?;
        if !matches!(self.c.peek(), Tok::Eof) {
            return self.c.err("trailing input after monitor");
        }
        Ok((ast, all_uses))
    }

    fn method_body(&mut self) -> Result<Vec<Ccr>, ParseError> {
        self.c.expect_sym("{")?;
        let mut ccrs = Vec::new();
        if self.c.is_kw("ccr") {
            while self.c.is_kw("ccr") {
                self.c.bump();
                self.c.expect_sym("{")?;
                ccrs.push(self.ccr()?);
                self.c.expect_sym("}")?;
            }
        } else {
            ccrs.push(self.ccr()?);
        }
        self.c.expect_sym("}")?;
        Ok(ccrs)
    }

    fn ccr(&mut self) -> Result<Ccr, ParseError> {
        let guard = if self.c.is_kw("waituntil") {
            self.c.bump();
            let g = self.guard()?;
            self.c.expect_sym(";")?;
            Some(g)
        } else {
            None
        };
        let body = self.stmts()?;
        let ccr = Ccr { guard, body };
        check_labels(&ccr, &self.c)?;
        Ok(ccr)
    }

    fn guard(&mut self) -> Result<Expr, ParseError> {
        let end = self.c.matching_paren();
        for i in self.c.position()..end {
            let t = self.c.token_at(i);
            if matches!(t.tok, Tok::Sym(":=") | Tok::Sym("++") | Tok::Sym("--") | Tok::Sym("=")) {
                return Err(ParseError::GuardSideEffect { line: t.line, col: t.col });
            }
        }
        self.c.expect_sym("(")?;
        let e = self.expr()?;
        self.c.expect_sym(")")?;
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let (line, col) = self.c.here();
        let e = self.c.expr()?;
        let reads = &mut self.uses.reads;
        e.visit(&mut |n, idx| reads.push((n.to_string(), line, col, idx.is_some())));
        Ok(e)
    }

    fn stmts(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        while !self.c.is_sym("}") && !self.c.is_kw("ccr") {
            if matches!(self.c.peek(), Tok::Eof) {
                return self.c.err("unexpected end of input");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.c.expect_sym("{")?;
        let b = self.stmts()?;
        self.c.expect_sym("}")?;
        Ok(b)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let (line, col) = self.c.here();
        let Tok::Ident(word) = self.c.peek().clone() else {
            return self.c.err(format!("expected statement, found {}", describe(self.c.peek())));
        };
        match word.as_str() {
            "waituntil" => Err(ParseError::MisplacedWaituntil { line, col }),
            "skip" => {
                self.c.bump();
                self.c.expect_sym(";")?;
                Ok(Stmt::Skip)
            }
            "goto" => {
                self.c.bump();
                let l = self.c.ident()?;
                self.c.expect_sym(";")?;
                Ok(Stmt::Goto(l))
            }
            "if" => {
                self.c.bump();
                self.c.expect_sym("(")?;
                let cond = self.expr()?;
                self.c.expect_sym(")")?;
                if self.c.is_kw("goto") {
                    self.c.bump();
                    let l = self.c.ident()?;
                    self.c.expect_sym(";")?;
                    return Ok(Stmt::IfGoto(cond, l));
                }
                let then_body = self.block()?;
                let else_body = if self.c.is_kw("else") {
                    self.c.bump();
                    if self.c.is_kw("if") {
                        vec![self.stmt()?]
                    } else {
                        self.block()?
                    }
                } else {
                    vec![]
                };
                Ok(Stmt::If { cond, then_body, else_body })
            }
            "while" => {
                self.c.bump();
                self.c.expect_sym("(")?;
                let cond = self.expr()?;
                self.c.expect_sym(")")?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            "broadcast" | "signal" => {
                self.c.bump();
                self.c.expect_sym("(")?;
                let pred = self.expr()?;
                self.c.expect_sym(",")?;
                let cond = self.expr()?;
                self.c.expect_sym(")")?;
                self.c.expect_sym(";")?;
                Ok(Stmt::Signal { pred, cond, all: word == "broadcast" })
            }
            _ => {
                self.c.bump();
                if self.c.is_sym(":") {
                    self.c.bump();
                    return Ok(Stmt::Label(word));
                }
                let index = if self.c.eat_sym("[") {
                    let i = self.expr()?;
                    self.c.expect_sym("]")?;
                    Some(i)
                } else {
                    None
                };
                self.uses.targets.push((word.clone(), line, col, index.is_some()));
                let delta = if self.c.eat_sym("++") {
                    1
                } else if self.c.eat_sym("--") {
                    -1
                } else {
                    0
                };
                if delta != 0 {
                    self.c.expect_sym(";")?;
                    self.uses.reads.push((word.clone(), line, col, index.is_some()));
                    return Ok(Stmt::Incr { name: word, index, delta, field: false });
                }
                self.c.expect_sym(":=")?;
                let value = self.expr()?;
                self.c.expect_sym(";")?;
                Ok(Stmt::Store { field: word, index, value })
            }
        }
    }
}

fn collect_labels(body: &[Stmt], defs: &mut Vec<String>, uses: &mut Vec<String>) {
    for s in body {
        match s {
            Stmt::Label(l) => defs.push(l.clone()),
            Stmt::Goto(l) | Stmt::IfGoto(_, l) => uses.push(l.clone()),
            Stmt::While { body, .. } => collect_labels(body, defs, uses),
            Stmt::If { then_body, else_body, .. } => {
                collect_labels(then_body, defs, uses);
                collect_labels(else_body, defs, uses);
            }
            _ => {}
        }
    }
}

fn check_labels(ccr: &Ccr, c: &Cursor) -> Result<(), ParseError> {
    let (mut defs, mut uses) = (vec![], vec![]);
    collect_labels(&ccr.body, &mut defs, &mut uses);
    let (line, col) = c.here();
    let mut seen = HashSet::new();
    for d in &defs {
        if !seen.insert(d) {
            return Err(ParseError::Duplicate { line, col, name: d.clone() });
        }
    }
    for u in uses {
        if !seen.contains(&u) {
            return Err(ParseError::UnresolvedLabel { line, col, name: u });
        }
    }
    Ok(())
}

/// Classify assignment targets into field stores and locals; reject undeclared reads.
fn resolve(mut ast: MonitorAst, uses: Vec<(MethodUses, usize, usize)>) -> Result<MonitorAst, ParseError> {
    let fields: HashMap<String, bool> = ast.fields.iter().map(|f| (f.name.clone(), f.ty.is_array())).collect();
    for (m, (u, mline, mcol)) in ast.methods.iter_mut().zip(uses) {
        let mut params = HashSet::new();
        for p in &m.params {
            if fields.contains_key(&p.name) || !params.insert(p.name.clone()) {
                return Err(ParseError::Duplicate { line: mline, col: mcol, name: p.name.clone() });
            }
        }
        let mut locals: BTreeSet<String> = BTreeSet::new();
        for (n, line, col, indexed) in &u.targets {
            match fields.get(n) {
                Some(is_arr) if *is_arr != *indexed => {
                    return Err(shape_error(n, *line, *col, *is_arr));
                }
                Some(_) => {}
                None if *indexed => {
                    return Err(ParseError::Undeclared { line: *line, col: *col, name: n.clone() });
                }
                None => {
                    if !params.contains(n) {
                        locals.insert(n.clone());
                    }
                }
            }
        }
        for (n, line, col, indexed) in &u.reads {
            match fields.get(n) {
                Some(is_arr) if *is_arr != *indexed => return Err(shape_error(n, *line, *col, *is_arr)),
                Some(_) => {}
                None if params.contains(n) || locals.contains(n) => {
                    if *indexed {
                        return Err(ParseError::Undeclared { line: *line, col: *col, name: n.clone() });
                    }
                }
                None => return Err(ParseError::Undeclared { line: *line, col: *col, name: n.clone() }),
            }
        }
        for c in &mut m.body {
            classify(&mut c.body, &fields);
        }
    }
    Ok(ast)
}

fn shape_error(n: &str, line: usize, col: usize, is_arr: bool) -> ParseError {
    let msg = if is_arr { format!("array `{n}` used without an index") } else { format!("scalar `{n}` cannot be indexed") };
    ParseError::Syntax { line, col, msg }
}

fn classify(body: &mut [Stmt], fields: &HashMap<String, bool>) {
    for s in body.iter_mut() {
        match s {
            Stmt::Store { field, index: None, value } if !fields.contains_key(field.as_str()) => {
                *s = Stmt::Assign { target: field.clone(), value: value.clone() };
            }
            Stmt::Incr { name, field, .. } => *field = fields.contains_key(name.as_str()),
            Stmt::While { body, .. } => classify(body, fields),
            Stmt::If { then_body, else_body, .. } => {
                classify(then_body, fields);
                classify(else_body, fields);
            }
            _ => {}
        }
    }
}
