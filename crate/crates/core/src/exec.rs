//! Compiled form of monitor code over a flat state vector.
//!
//! Fields live in one `Vec<i64>` (array cells contiguous); each thread has a
//! frame of parameters followed by locals.

use std::collections::HashMap;

use thiserror::Error;

use crate::fdg::{Cfg, Instr};
use crate::frontend::{BinOp, Expr, FieldDecl, MethodDecl, MonitorAst, Range, Stmt, UnOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("division by zero")]
    DivByZero,
    #[error("index {index} out of bounds for `{field}`")]
    IndexOutOfBounds { field: String, index: i64 },
    #[error("value {value} outside the domain of `{field}`")]
    Overflow { field: String, value: i64 },
    #[error("step limit exceeded")]
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct FieldSlot {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub range: Range,
    pub is_array: bool,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub fields: Vec<FieldSlot>,
    pub size: usize,
    by_name: HashMap<String, usize>,
}

impl Layout {
    pub fn new(fields: &[FieldDecl]) -> Self {
        let mut slots = Vec::new();
        let mut by_name = HashMap::new();
        let mut off = 0;
        for f in fields {
            by_name.insert(f.name.clone(), slots.len());
            slots.push(FieldSlot { name: f.name.clone(), offset: off, len: f.ty.len(), range: f.ty.elem(), is_array: f.ty.is_array() });
            off += f.ty.len();
        }
        Layout { fields: slots, size: off, by_name }
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn initial(&self, fields: &[FieldDecl]) -> Vec<i64> {
        fields.iter().flat_map(|f| f.init.iter().copied()).collect()
    }

    /// Slot owning an absolute cell.
    pub fn slot_of_cell(&self, cell: usize) -> usize {
        self.fields.iter().position(|s| cell >= s.offset && cell < s.offset + s.len).expect("cell in layout")
    }

    pub fn cell_name(&self, cell: usize) -> String {
        let s = &self.fields[self.slot_of_cell(cell)];
        if s.is_array {
            format!("{}[{}]", s.name, cell - s.offset)
        } else {
            s.name.clone()
        }
    }

    /// Field values as a name -> value(s) JSON map.
    pub fn to_json(&self, st: &[i64]) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for s in &self.fields {
            let v = if s.is_array {
                serde_json::json!(st[s.offset..s.offset + s.len])
            } else {
                serde_json::json!(st[s.offset])
            };
            m.insert(s.name.clone(), v);
        }
        serde_json::Value::Object(m)
    }
}

/// Parameter and local names of one method.
#[derive(Debug, Clone, Default)]
pub struct Frame {
    pub names: Vec<String>,
    pub params: Vec<Range>,
    by_name: HashMap<String, usize>,
}

impl Frame {
    pub fn new(params: &[(String, Range)], locals: impl IntoIterator<Item = String>) -> Self {
        let mut f = Frame::default();
        for (n, r) in params {
            f.push(n);
            f.params.push(*r);
        }
        for l in locals {
            if !f.by_name.contains_key(&l) {
                f.push(&l);
            }
        }
        f
    }

    fn push(&mut self, n: &str) {
        self.by_name.insert(n.to_string(), self.names.len());
        self.names.push(n.to_string());
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Fresh locals vector for the given argument values.
    pub fn enter(&self, args: &[i64]) -> Vec<i64> {
        let mut v = vec![0; self.names.len()];
        v[..args.len()].copy_from_slice(args);
        v
    }

    /// Every valuation of the parameters.
    pub fn arg_space(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for r in &self.params {
            let mut next = Vec::new();
            for prefix in &out {
                for v in r.values() {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    pub fn arg_space_size(&self) -> u64 {
        self.params.iter().map(|r| r.size()).product()
    }
}

/// Locals of a method in order of first assignment.
pub fn method_locals(m: &MethodDecl) -> Vec<String> {
    fn walk(body: &[Stmt], out: &mut Vec<String>) {
        for s in body {
            match s {
                Stmt::Assign { target, .. } if !out.contains(target) => out.push(target.clone()),
                Stmt::Incr { name, field: false, .. } if !out.contains(name) => out.push(name.clone()),
                Stmt::While { body, .. } => walk(body, out),
                Stmt::If { then_body, else_body, .. } => {
                    walk(then_body, out);
                    walk(else_body, out);
                }
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    for c in &m.body {
        walk(&c.body, &mut out);
    }
    out.retain(|l| !m.params.iter().any(|p| &p.name == l));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CExpr {
    Const(i64),
    Cell(usize),
    Index { slot: usize, base: usize, len: usize, idx: Box<CExpr> },
    Local(usize),
    Un(UnOp, Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

/// Cells touched during evaluation or execution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessLog {
    pub reads: Vec<usize>,
    pub writes: Vec<usize>,
}

pub fn compile_expr(layout: &Layout, frame: &Frame, e: &Expr) -> CExpr {
    match e {
        Expr::Int(v) => CExpr::Const(*v),
        Expr::Bool(b) => CExpr::Const(*b as i64),
        Expr::Var(n) | Expr::Get(n) => match layout.slot(n) {
            Some(s) => CExpr::Cell(layout.fields[s].offset),
            None => CExpr::Local(frame.slot(n).unwrap_or_else(|| panic!("unresolved name `{n}`"))),
        },
        Expr::Index(n, i) => {
            let s = layout.slot(n).unwrap_or_else(|| panic!("unresolved array `{n}`"));
            let f = &layout.fields[s];
            CExpr::Index { slot: s, base: f.offset, len: f.len, idx: Box::new(compile_expr(layout, frame, i)) }
        }
        Expr::Unary(op, a) => CExpr::Un(*op, Box::new(compile_expr(layout, frame, a))),
        Expr::Binary(op, a, b) => {
            CExpr::Bin(*op, Box::new(compile_expr(layout, frame, a)), Box::new(compile_expr(layout, frame, b)))
        }
    }
}

impl CExpr {
    pub fn eval(&self, layout: &Layout, fields: &[i64], locals: &[i64], mut log: Option<&mut AccessLog>) -> Result<i64, ExecError> {
        Ok(match self {
            CExpr::Const(v) => *v,
            CExpr::Cell(c) => {
                if let Some(l) = log {
                    l.reads.push(*c);
                }
                fields[*c]
            }
            CExpr::Index { slot, base, len, idx } => {
                let i = idx.eval(layout, fields, locals, log.as_deref_mut())?;
                if i < 0 || i as usize >= *len {
                    return Err(ExecError::IndexOutOfBounds { field: layout.fields[*slot].name.clone(), index: i });
                }
                if let Some(l) = log {
                    l.reads.push(base + i as usize);
                }
                fields[base + i as usize]
            }
            CExpr::Local(s) => locals[*s],
            CExpr::Un(UnOp::Neg, a) => a.eval(layout, fields, locals, log)?.wrapping_neg(),
            CExpr::Un(UnOp::Not, a) => (a.eval(layout, fields, locals, log)? == 0) as i64,
            CExpr::Bin(op, a, b) => {
                let x = a.eval(layout, fields, locals, log.as_deref_mut())?;
                match op {
                    BinOp::And if x == 0 => return Ok(0),
                    BinOp::Or if x != 0 => return Ok(1),
                    _ => {}
                }
                let y = b.eval(layout, fields, locals, log)?;
                match op {
                    BinOp::Add => x.wrapping_add(y),
                    BinOp::Sub => x.wrapping_sub(y),
                    BinOp::Mul => x.wrapping_mul(y),
                    BinOp::Div => {
                        if y == 0 {
                            return Err(ExecError::DivByZero);
                        }
                        x.wrapping_div(y)
                    }
                    BinOp::Mod => {
                        if y == 0 {
                            return Err(ExecError::DivByZero);
                        }
                        x.wrapping_rem(y)
                    }
                    BinOp::Lt => (x < y) as i64,
                    BinOp::Le => (x <= y) as i64,
                    BinOp::Gt => (x > y) as i64,
                    BinOp::Ge => (x >= y) as i64,
                    BinOp::Eq => (x == y) as i64,
                    BinOp::Ne => (x != y) as i64,
                    BinOp::And | BinOp::Or => (y != 0) as i64,
                }
            }
        })
    }
}

/// Write a value to a field cell, checking the domain when asked.
pub fn store(
    layout: &Layout,
    fields: &mut [i64],
    slot: usize,
    idx: Option<i64>,
    v: i64,
    check: bool,
    log: Option<&mut AccessLog>,
) -> Result<(), ExecError> {
    let f = &layout.fields[slot];
    let cell = match idx {
        Some(i) => {
            if i < 0 || i as usize >= f.len {
                return Err(ExecError::IndexOutOfBounds { field: f.name.clone(), index: i });
            }
            f.offset + i as usize
        }
        None => f.offset,
    };
    if check && !f.range.contains(v) {
        return Err(ExecError::Overflow { field: f.name.clone(), value: v });
    }
    if let Some(l) = log {
        l.writes.push(cell);
    }
    fields[cell] = v;
    Ok(())
}

#[derive(Debug, Clone)]
pub enum COp {
    Wait(CExpr),
    Skip,
    Assign(usize, CExpr),
    Store { slot: usize, idx: Option<CExpr>, value: CExpr },
    Goto,
    IfGoto(CExpr),
    Signal,
}

#[derive(Debug, Clone)]
pub struct CBlock {
    pub op: COp,
    pub ccr: usize,
    pub fall: Option<usize>,
    pub jump: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CMethod {
    pub name: String,
    pub frame: Frame,
    pub blocks: Vec<CBlock>,
    pub ccr_entry: Vec<usize>,
}

/// How a waituntil guard behaves when executed outside the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardMode {
    /// A false guard aborts the run (assume).
    Assume,
    /// A false guard is a failure (assert).
    Assert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    /// Continue at this block (or finish the method).
    Next(Option<usize>),
    /// Guard evaluated to false.
    GuardFalse,
}

pub const STEP_LIMIT: usize = 10_000;

/// Monitor compiled for direct execution.
#[derive(Debug, Clone)]
pub struct Program {
    pub layout: Layout,
    pub init: Vec<i64>,
    pub methods: Vec<CMethod>,
}

impl Program {
    pub fn new(ast: &MonitorAst, cfgs: &[Cfg]) -> Self {
        let layout = Layout::new(&ast.fields);
        let init = layout.initial(&ast.fields);
        let methods = ast
            .methods
            .iter()
            .zip(cfgs)
            .map(|(m, cfg)| {
                let params: Vec<(String, Range)> = m.params.iter().map(|p| (p.name.clone(), p.range)).collect();
                let frame = Frame::new(&params, method_locals(m));
                let blocks = (0..cfg.len())
                    .map(|b| {
                        let c = |e: &Expr| compile_expr(&layout, &frame, e);
                        let op = match &cfg.blocks[b].instr {
                            Instr::Wait(p) => COp::Wait(c(p)),
                            Instr::Stmt(s) => match s {
                                Stmt::Assign { target, value } => COp::Assign(frame.slot(target).expect("local"), c(value)),
                                Stmt::Store { field, index, value } => COp::Store {
                                    slot: layout.slot(field).expect("field"),
                                    idx: index.as_ref().map(c),
                                    value: c(value),
                                },
                                Stmt::Goto(_) => COp::Goto,
                                Stmt::IfGoto(e, _) => COp::IfGoto(c(e)),
                                Stmt::Signal { .. } => COp::Signal,
                                _ => COp::Skip,
                            },
                        };
                        CBlock { op, ccr: cfg.blocks[b].ccr, fall: cfg.fallthrough(b), jump: cfg.jump_target(b) }
                    })
                    .collect();
                CMethod { name: m.name.clone(), frame, blocks, ccr_entry: cfg.ccr_entry.clone() }
            })
            .collect();
        Program { layout, init, methods }
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m.name == name)
    }

    /// Execute one block.
    pub fn step(
        &self,
        m: usize,
        b: usize,
        fields: &mut [i64],
        locals: &mut [i64],
        check: bool,
        mut log: Option<&mut AccessLog>,
    ) -> Result<Flow, ExecError> {
        let blk = &self.methods[m].blocks[b];
        let lay = &self.layout;
        match &blk.op {
            COp::Wait(p) => {
                if p.eval(lay, fields, locals, log)? == 0 {
                    return Ok(Flow::GuardFalse);
                }
            }
            COp::Skip | COp::Signal => {}
            COp::Assign(s, e) => locals[*s] = e.eval(lay, fields, locals, log)?,
            COp::Store { slot, idx, value } => {
                let i = match idx {
                    Some(i) => Some(i.eval(lay, fields, locals, log.as_deref_mut())?),
                    None => None,
                };
                let v = value.eval(lay, fields, locals, log.as_deref_mut())?;
                store(lay, fields, *slot, i, v, check, log)?;
            }
            COp::Goto => return Ok(Flow::Next(blk.jump)),
            COp::IfGoto(c) => {
                if c.eval(lay, fields, locals, log)? != 0 {
                    return Ok(Flow::Next(blk.jump));
                }
            }
        }
        Ok(Flow::Next(blk.fall))
    }

    /// Run CCR `k` of method `m` atomically. `Ok(false)` when its guard is false.
    pub fn run_ccr(&self, m: usize, k: usize, fields: &mut [i64], locals: &mut [i64], check: bool) -> Result<bool, ExecError> {
        let meth = &self.methods[m];
        let mut cur = Some(meth.ccr_entry[k]);
        let mut steps = 0;
        while let Some(b) = cur {
            if meth.blocks[b].ccr != k {
                break;
            }
            steps += 1;
            if steps > STEP_LIMIT {
                return Err(ExecError::StepLimit);
            }
            match self.step(m, b, fields, locals, check, None)? {
                Flow::GuardFalse => return Ok(false),
                Flow::Next(n) => cur = n,
            }
        }
        Ok(true)
    }

    /// Run a fragment from its entry until control leaves `inside`.
    /// `Ok(None)` when a guard is false.
    pub fn run_fragment(
        &self,
        m: usize,
        entry: usize,
        inside: &[bool],
        fields: &mut [i64],
        locals: &mut [i64],
        mut log: Option<&mut AccessLog>,
    ) -> Result<Option<Option<usize>>, ExecError> {
        let mut cur = Some(entry);
        let mut steps = 0;
        while let Some(b) = cur {
            if !inside[b] {
                break;
            }
            steps += 1;
            if steps > STEP_LIMIT {
                return Err(ExecError::StepLimit);
            }
            match self.step(m, b, fields, locals, false, log.as_deref_mut())? {
                Flow::GuardFalse => return Ok(None),
                Flow::Next(n) => cur = n,
            }
        }
        Ok(Some(cur))
    }

    /// Run method `m` from its start until block `target` is reached.
    /// Returns false if a guard fails or the method ends first.
    pub fn run_prefix(&self, m: usize, target: usize, fields: &mut [i64], locals: &mut [i64]) -> Result<bool, ExecError> {
        let mut cur = Some(0);
        let mut steps = 0;
        while let Some(b) = cur {
            if b == target {
                return Ok(true);
            }
            steps += 1;
            if steps > STEP_LIMIT {
                return Err(ExecError::StepLimit);
            }
            match self.step(m, b, fields, locals, true, None)? {
                Flow::GuardFalse => return Ok(false),
                Flow::Next(n) => cur = n,
            }
        }
        Ok(false)
    }

    /// Run a whole method sequentially; `Ok(false)` if some guard is false.
    pub fn run_method(&self, m: usize, fields: &mut [i64], args: &[i64]) -> Result<bool, ExecError> {
        let mut locals = self.methods[m].frame.enter(args);
        for k in 0..self.methods[m].ccr_entry.len() {
            if !self.run_ccr(m, k, fields, &mut locals, true)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
