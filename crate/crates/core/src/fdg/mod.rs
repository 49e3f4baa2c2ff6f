//! Fragments and the fragment dependency graph.

pub mod cfg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

pub use cfg::{build_cfg, Block, Cfg, Instr};

use crate::frontend::{Expr, MonitorAst};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FdgError {
    #[error("method `{0}` is not desugared")]
    NotDesugared(String),
    #[error("method `{0}`: unresolved label `{1}`")]
    UnresolvedLabel(String, String),
    #[error("fragment graph has a cycle through {0:?}")]
    Cyclic(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    #[default]
    Paper,
    Stmt,
    Ccr,
}

impl std::str::FromStr for PartitionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(PartitionMode::Paper),
            "stmt" => Ok(PartitionMode::Stmt),
            "ccr" => Ok(PartitionMode::Ccr),
            _ => Err(format!("unknown partition mode `{s}` (paper|stmt|ccr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FragmentKind {
    Waituntil,
    Signal,
    Plain,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fragment {
    pub id: usize,
    pub method: usize,
    pub kind: FragmentKind,
    /// Block ids inside the method CFG, sorted.
    pub blocks: Vec<usize>,
    pub entry: usize,
}

impl Fragment {
    pub fn name(&self) -> String {
        format!("f{}", self.id + 1)
    }
}

/// A partition of one method's CFG: lists of block ids.
pub fn partition(cfg: &Cfg, mode: PartitionMode) -> Vec<Vec<usize>> {
    let n = cfg.len();
    let mut frag_of: Vec<Option<usize>> = vec![None; n];
    let mut frags: Vec<Vec<usize>> = Vec::new();
    let singleton = |b: usize| cfg.blocks[b].instr.is_wait() || cfg.blocks[b].instr.is_signal();
    if mode == PartitionMode::Ccr {
        for k in 0..cfg.ccr_entry.len() {
            let mut body = Vec::new();
            for b in 0..n {
                if cfg.blocks[b].ccr != k {
                    continue;
                }
                if singleton(b) {
                    frags.push(vec![b]);
                } else {
                    body.push(b);
                }
            }
            if !body.is_empty() {
                frags.push(body);
            }
        }
        frags.sort();
        return frags;
    }
    for l in cfg::loops(cfg) {
        for &b in &l {
            frag_of[b] = Some(frags.len());
        }
        frags.push(l);
    }
    let mut open: Option<usize> = None;
    for b in 0..n {
        if frag_of[b].is_some() || singleton(b) {
            if frag_of[b].is_none() {
                frag_of[b] = Some(frags.len());
                frags.push(vec![b]);
            }
            open = None;
            continue;
        }
        let join = match (mode, open) {
            (PartitionMode::Paper, Some(f)) => cfg.preds[b].iter().all(|p| frag_of[*p] == Some(f)),
            _ => false,
        };
        if join {
            let f = open.unwrap();
            frags[f].push(b);
            frag_of[b] = Some(f);
        } else {
            frag_of[b] = Some(frags.len());
            open = Some(frags.len());
            frags.push(vec![b]);
        }
        if cfg.blocks[b].instr.is_store() {
            open = None;
        }
    }
    frags.sort();
    frags
}

#[derive(Debug, Clone, Serialize)]
pub struct Fdg {
    pub cfgs: Vec<Cfg>,
    pub fragments: Vec<Fragment>,
    pub edges: BTreeSet<(usize, usize)>,
    /// Per method: block id -> fragment id.
    pub frag_of: Vec<Vec<usize>>,
    pub method_entry: Vec<Option<usize>>,
    pub method_exits: Vec<Vec<usize>>,
    pub method_names: Vec<String>,
}

impl Fdg {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn cfg_of(&self, f: usize) -> &Cfg {
        &self.cfgs[self.fragments[f].method]
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.iter().copied().collect()
    }

    pub fn succs(&self, f: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.0 == f).map(|e| e.1).collect()
    }

    pub fn preds(&self, f: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == f).map(|e| e.0).collect()
    }

    /// Reflexive-transitive closure: `reach[a][b]` iff `(a, b) ∈ E*`.
    pub fn closure(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut reach = vec![vec![false; n]; n];
        for (s, row) in reach.iter_mut().enumerate() {
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                if row[v] {
                    continue;
                }
                row[v] = true;
                stack.extend(self.succs(v));
            }
        }
        reach
    }

    pub fn instrs(&self, f: usize) -> Vec<&Instr> {
        let cfg = self.cfg_of(f);
        self.fragments[f].blocks.iter().map(|b| &cfg.blocks[*b].instr).collect()
    }

    pub fn text(&self, f: usize) -> Vec<String> {
        let cfg = self.cfg_of(f);
        self.fragments[f].blocks.iter().map(|b| cfg::instr_text(cfg, *b)).collect()
    }

    /// Guard of a waituntil fragment.
    pub fn wait_pred(&self, f: usize) -> Option<&Expr> {
        match self.instrs(f).first() {
            Some(Instr::Wait(p)) if self.fragments[f].kind == FragmentKind::Waituntil => Some(p),
            _ => None,
        }
    }

    pub fn same_method(&self, a: usize, b: usize) -> bool {
        self.fragments[a].method == self.fragments[b].method
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = self
            .fragments
            .iter()
            .map(|f| {
                serde_json::json!({
                    "id": f.name(),
                    "method": self.method_names[f.method],
                    "kind": f.kind,
                    "blocks": f.blocks,
                    "statements": self.text(f.id),
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|(a, b)| serde_json::json!([self.fragments[*a].name(), self.fragments[*b].name()]))
            .collect();
        serde_json::json!({ "vertices": vertices, "edges": edges })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph fdg {\n  node [shape=box, fontname=monospace];\n");
        for (m, name) in self.method_names.iter().enumerate() {
            writeln!(s, "  subgraph cluster_{m} {{\n    label=\"{name}\";").unwrap();
            for f in self.fragments.iter().filter(|f| f.method == m) {
                let label = self.text(f.id).join("\\l").replace('"', "\\\"");
                writeln!(s, "    {} [label=\"{}\\l{}\\l\"];", f.name(), f.name(), label).unwrap();
            }
            s.push_str("  }\n");
        }
        for (a, b) in &self.edges {
            writeln!(s, "  {} -> {};", self.fragments[*a].name(), self.fragments[*b].name()).unwrap();
        }
        s.push_str("}\n");
        s
    }
}

/// Assemble the monitor-wide FDG from per-method partitions.
pub fn build_fdg(cfgs: Vec<Cfg>, partitions: Vec<Vec<Vec<usize>>>) -> Result<Fdg, FdgError> {
    let mut fragments = Vec::new();
    let mut edges = BTreeSet::new();
    let mut frag_of_all = Vec::new();
    let mut method_entry = Vec::new();
    let mut method_exits = Vec::new();
    let method_names = cfgs.iter().map(|c| c.method.clone()).collect();
    for (m, (cfg, parts)) in cfgs.iter().zip(partitions).enumerate() {
        let mut local_of = vec![usize::MAX; cfg.len()];
        for (i, p) in parts.iter().enumerate() {
            for &b in p {
                local_of[b] = i;
            }
        }
        let k = parts.len();
        let mut local_edges = BTreeSet::new();
        for b in 0..cfg.len() {
            for &s in &cfg.succs[b] {
                let (x, y) = (local_of[b], local_of[s]);
                if x != y {
                    local_edges.insert((x, y));
                }
            }
        }
        // Kahn with smallest-first-block tie break.
        let mut indeg = vec![0usize; k];
        for (_, y) in &local_edges {
            indeg[*y] += 1;
        }
        let mut ready: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..k {
            if indeg[i] == 0 {
                ready.insert(parts[i][0], i);
            }
        }
        let mut order = Vec::new();
        while let Some((_, i)) = ready.pop_first() {
            order.push(i);
            for (_, y) in local_edges.iter().filter(|e| e.0 == i) {
                indeg[*y] -= 1;
                if indeg[*y] == 0 {
                    ready.insert(parts[*y][0], *y);
                }
            }
        }
        if order.len() != k {
            let stuck: Vec<usize> = (0..k).filter(|i| !order.contains(i)).map(|i| parts[i][0]).collect();
            return Err(FdgError::Cyclic(stuck));
        }
        let base = fragments.len();
        let mut global = vec![0usize; k];
        for (pos, &i) in order.iter().enumerate() {
            global[i] = base + pos;
        }
        for &i in &order {
            let blocks = parts[i].clone();
            let entry = blocks.iter().copied().find(|b| cfg.preds[*b].iter().any(|p| local_of[*p] != i) || *b == cfg.entry).unwrap_or(blocks[0]);
            let instr = &cfg.blocks[blocks[0]].instr;
            let kind = if instr.is_wait() {
                FragmentKind::Waituntil
            } else if instr.is_signal() {
                FragmentKind::Signal
            } else {
                FragmentKind::Plain
            };
            fragments.push(Fragment { id: global[i], method: m, kind, blocks, entry });
        }
        for (x, y) in local_edges {
            edges.insert((global[x], global[y]));
        }
        let frag_of: Vec<usize> = local_of.iter().map(|i| global[*i]).collect();
        method_entry.push(if cfg.is_empty() { None } else { Some(frag_of[cfg.entry]) });
        let mut exits: Vec<usize> = (0..cfg.len()).filter(|b| cfg.succs[*b].is_empty()).map(|b| frag_of[b]).collect();
        exits.sort();
        exits.dedup();
        method_exits.push(exits);
        frag_of_all.push(frag_of);
    }
    Ok(Fdg { cfgs, fragments, edges, frag_of: frag_of_all, method_entry, method_exits, method_names })
}

/// CFGs, partition and FDG for a desugared monitor.
pub fn construct(ast: &MonitorAst, mode: PartitionMode) -> Result<Fdg, FdgError> {
    let cfgs = ast.methods.iter().map(build_cfg).collect::<Result<Vec<_>, _>>()?;
    let parts = cfgs.iter().map(|c| partition(c, mode)).collect();
    build_fdg(cfgs, parts)
}
