//! Per-method control-flow graphs with one statement per block.

use std::collections::HashMap;

use serde::Serialize;

use super::FdgError;
use crate::frontend::{expr_to_string, stmt_to_string, Expr, MethodDecl, Stmt};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Instr {
    Wait(Expr),
    Stmt(Stmt),
}

impl Instr {
    pub fn text(&self) -> String {
        match self {
            Instr::Wait(p) => format!("waituntil({});", expr_to_string(p)),
            Instr::Stmt(s) => stmt_to_string(s),
        }
    }

    pub fn is_wait(&self) -> bool {
        matches!(self, Instr::Wait(_))
    }

    pub fn is_signal(&self) -> bool {
        matches!(self, Instr::Stmt(Stmt::Signal { .. }))
    }

    pub fn is_store(&self) -> bool {
        matches!(self, Instr::Stmt(Stmt::Store { .. }))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub id: usize,
    /// Index of the CCR this block belongs to.
    pub ccr: usize,
    pub instr: Instr,
    /// Source labels naming this block.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cfg {
    pub method: String,
    pub blocks: Vec<Block>,
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    pub entry: usize,
    /// First block of each CCR (its waituntil).
    pub ccr_entry: Vec<usize>,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succs.iter().map(|s| s.len()).sum()
    }

    /// Successor taken by falling through `b`, if any.
    pub fn fallthrough(&self, b: usize) -> Option<usize> {
        match &self.blocks[b].instr {
            Instr::Stmt(Stmt::Goto(_)) => None,
            _ => (b + 1 < self.blocks.len()).then_some(b + 1),
        }
    }

    /// Block targeted by a jump in `b`, if any.
    pub fn jump_target(&self, b: usize) -> Option<usize> {
        match &self.blocks[b].instr {
            Instr::Stmt(Stmt::Goto(l)) | Instr::Stmt(Stmt::IfGoto(_, l)) => {
                let ccr = self.blocks[b].ccr;
                self.blocks.iter().find(|x| x.ccr == ccr && x.labels.contains(l)).map(|x| x.id)
            }
            _ => None,
        }
    }
}

/// Build the CFG of a desugared method; unreachable blocks are dropped.
pub fn build_cfg(m: &MethodDecl) -> Result<Cfg, FdgError> {
    let mut raw: Vec<(usize, Instr, Vec<String>)> = Vec::new();
    for (k, c) in m.body.iter().enumerate() {
        let guard = c.guard.clone().unwrap_or(Expr::Bool(true));
        raw.push((k, Instr::Wait(guard), vec![]));
        let mut pending: Vec<String> = Vec::new();
        for s in &c.body {
            match s {
                Stmt::Label(l) => pending.push(l.clone()),
                s if !s.is_core() => return Err(FdgError::NotDesugared(m.name.clone())),
                s => raw.push((k, Instr::Stmt(s.clone()), std::mem::take(&mut pending))),
            }
        }
        if !pending.is_empty() {
            raw.push((k, Instr::Stmt(Stmt::Skip), pending));
        }
    }
    let n = raw.len();
    let mut label_at: HashMap<(usize, &str), usize> = HashMap::new();
    for (i, (k, _, labels)) in raw.iter().enumerate() {
        for l in labels {
            label_at.insert((*k, l.as_str()), i);
        }
    }
    let mut succs = vec![Vec::new(); n];
    for (i, (k, instr, _)) in raw.iter().enumerate() {
        let fall = (i + 1 < n).then_some(i + 1);
        let target = |l: &str| {
            label_at.get(&(*k, l)).copied().ok_or_else(|| FdgError::UnresolvedLabel(m.name.clone(), l.to_string()))
        };
        match instr {
            Instr::Stmt(Stmt::Goto(l)) => succs[i].push(target(l)?),
            Instr::Stmt(Stmt::IfGoto(_, l)) => {
                succs[i].push(target(l)?);
                if let Some(f) = fall {
                    if !succs[i].contains(&f) {
                        succs[i].push(f);
                    }
                }
            }
            _ => succs[i].extend(fall),
        }
    }
    // Reachability from the entry.
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    while let Some(b) = stack.pop() {
        if b >= n || seen[b] {
            continue;
        }
        seen[b] = true;
        stack.extend(succs[b].iter().copied());
    }
    let mut remap = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for (i, (k, instr, labels)) in raw.into_iter().enumerate() {
        if seen[i] {
            remap[i] = blocks.len();
            blocks.push(Block { id: blocks.len(), ccr: k, instr, labels });
        }
    }
    let mut new_succs = vec![Vec::new(); blocks.len()];
    let mut preds = vec![Vec::new(); blocks.len()];
    for i in 0..n {
        if !seen[i] {
            continue;
        }
        for &s in &succs[i] {
            new_succs[remap[i]].push(remap[s]);
            preds[remap[s]].push(remap[i]);
        }
    }
    let mut ccr_entry = Vec::new();
    for b in &blocks {
        if b.instr.is_wait() {
            ccr_entry.push(b.id);
        }
    }
    Ok(Cfg { method: m.name.clone(), blocks, succs: new_succs, preds, entry: 0, ccr_entry })
}

/// Strongly connected components (Tarjan), each as a sorted block list.
pub fn sccs(cfg: &Cfg) -> Vec<Vec<usize>> {
    struct T<'a> {
        g: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(t: &mut T, v: usize) {
        t.index[v] = Some(t.next);
        t.low[v] = t.next;
        t.next += 1;
        t.stack.push(v);
        t.on[v] = true;
        for i in 0..t.g[v].len() {
            let w = t.g[v][i];
            match t.index[w] {
                None => {
                    visit(t, w);
                    t.low[v] = t.low[v].min(t.low[w]);
                }
                Some(iw) if t.on[w] => t.low[v] = t.low[v].min(iw),
                _ => {}
            }
        }
        if Some(t.low[v]) == t.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = t.stack.pop() {
                t.on[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort();
            t.out.push(comp);
        }
    }
    let n = cfg.len();
    let mut t = T { g: &cfg.succs, index: vec![None; n], low: vec![0; n], on: vec![false; n], stack: vec![], next: 0, out: vec![] };
    for v in 0..n {
        if t.index[v].is_none() {
            visit(&mut t, v);
        }
    }
    t.out.sort();
    t.out
}

/// Loops: SCCs with at least one edge.
pub fn loops(cfg: &Cfg) -> Vec<Vec<usize>> {
    sccs(cfg).into_iter().filter(|c| c.len() > 1 || cfg.succs[c[0]].contains(&c[0])).collect()
}

pub fn instr_text(cfg: &Cfg, b: usize) -> String {
    let blk = &cfg.blocks[b];
    let mut s = String::new();
    for l in &blk.labels {
        s.push_str(l);
        s.push_str(": ");
    }
    s.push_str(&blk.instr.text());
    s
}
