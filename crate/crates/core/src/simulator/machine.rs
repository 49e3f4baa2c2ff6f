//! Operational semantics of explicit monitors.
//!
//! Releasing a lock hands it to one blocked thread (every choice is a
//! separate successor); that thread owns the reservation until it runs.
//! `await` releases the condition's lock and parks the thread; a notified
//! thread must reacquire the lock before continuing after the `await`.

use std::collections::HashMap;

use serde::Serialize;

use super::implicit::Snapshot;
use crate::codegen::{estmt_to_string, EStmt, ExplicitMonitor};
use crate::exec::{compile_expr, store, CExpr, Frame, Layout, STEP_LIMIT};
use crate::frontend::{Expr, Range};

#[derive(Debug, Clone)]
enum SOp {
    Skip,
    /// Label; `Some(k)` marks the start of CCR `k`.
    Mark(Option<usize>),
    Assign(usize, CExpr),
    Store { slot: usize, idx: Option<CExpr>, value: CExpr },
    Goto(usize),
    IfGoto(CExpr, usize),
    Lock(usize),
    Unlock(usize),
    Await(usize),
    Signal(usize),
    SignalAll(usize),
    Update { target: usize, slot: usize, var: usize, body: CExpr },
}

#[derive(Debug, Clone)]
struct MMethod {
    name: String,
    frame: Frame,
    body: Vec<SOp>,
    text: Vec<String>,
    /// Condition predicate per condvar in this method's frame, if it resolves.
    preds: Vec<Option<CExpr>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "status", content = "on", rename_all = "snake_case")]
pub enum Status {
    Ready,
    BlockedLock(usize),
    NotifiedLock(usize),
    WaitCv(usize),
    NotifiedCv(usize),
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MThread {
    pub op: usize,
    pub pc: usize,
    /// CCR of the current operation, from the last `__ccr<k>` label.
    pub seg: usize,
    pub locals: Vec<i64>,
    pub status: Status,
    pub results: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MState {
    pub fields: Vec<i64>,
    pub threads: Vec<MThread>,
    pub holder: Vec<Option<usize>>,
    pub reserved: Vec<Option<usize>>,
}

/// One executed statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Event {
    pub thread: usize,
    pub method: usize,
    pub pc: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "UPPERCASE")]
pub enum Outcome {
    Final,
    /// Every unfinished thread waits on a condition that is false.
    Blocked,
    Stuck { reason: String },
    Deadlock { cycle: Vec<(usize, usize)> },
}

/// Compiled explicit monitor plus the workload it runs.
#[derive(Debug, Clone)]
pub struct Machine {
    pub layout: Layout,
    pub init: Vec<i64>,
    locks: usize,
    cv_lock: Vec<usize>,
    methods: Vec<MMethod>,
    /// Per thread: (method, args) of each operation.
    ops: Vec<Vec<(usize, Vec<i64>)>>,
    /// Per method: explicit frame slot of each observed local.
    observe: Vec<Vec<usize>>,
}

pub type Step = Result<Vec<MState>, String>;

fn resolves(layout: &Layout, frame: &Frame, e: &Expr) -> bool {
    let mut ok = true;
    e.visit(&mut |n, idx| {
        let field = layout.slot(n).is_some_and(|s| layout.fields[s].is_array == idx.is_some());
        if !field && (idx.is_some() || frame.slot(n).is_none()) {
            ok = false;
        }
    });
    ok
}

impl Machine {
    pub fn new(em: &ExplicitMonitor) -> Result<Machine, String> {
        let layout = Layout::new(&em.field_decls());
        let init = layout.initial(&em.field_decls());
        let mut methods = Vec::new();
        for m in &em.methods {
            let params: Vec<(String, Range)> = m.params.iter().map(|p| (p.name.clone(), p.range)).collect();
            let mut locals = Vec::new();
            for s in &m.body {
                match s {
                    EStmt::Assign { target, .. } => locals.push(target.clone()),
                    EStmt::Update { target, var, .. } => {
                        locals.push(target.clone());
                        locals.push(var.clone());
                    }
                    _ => {}
                }
            }
            let frame = Frame::new(&params, locals);
            let labels: HashMap<&str, usize> = m
                .body
                .iter()
                .enumerate()
                .filter_map(|(i, s)| if let EStmt::Label(l) = s { Some((l.as_str(), i)) } else { None })
                .collect();
            let target = |l: &str| labels.get(l).copied().ok_or_else(|| format!("{}: unknown label `{l}`", m.name));
            let cexpr = |e: &Expr| {
                if resolves(&layout, &frame, e) {
                    Ok(compile_expr(&layout, &frame, e))
                } else {
                    Err(format!("{}: unresolved name in `{}`", m.name, crate::frontend::expr_to_string(e)))
                }
            };
            let field = |f: &str| layout.slot(f).ok_or_else(|| format!("{}: unknown field `{f}`", m.name));
            let mut body = Vec::new();
            for s in &m.body {
                body.push(match s {
                    EStmt::Skip => SOp::Skip,
                    EStmt::Label(l) => SOp::Mark(l.strip_prefix("__ccr").and_then(|k| k.parse().ok())),
                    EStmt::Assign { target, value } => SOp::Assign(frame.slot(target).expect("local"), cexpr(value)?),
                    EStmt::Store { field: f, index, value } => SOp::Store {
                        slot: field(f)?,
                        idx: index.as_ref().map(cexpr).transpose()?,
                        value: cexpr(value)?,
                    },
                    EStmt::Goto(l) => SOp::Goto(target(l)?),
                    EStmt::IfGoto(c, l) => SOp::IfGoto(cexpr(c)?, target(l)?),
                    EStmt::Lock(l) => SOp::Lock(*l),
                    EStmt::Unlock(l) => SOp::Unlock(*l),
                    EStmt::Await(c) => SOp::Await(*c),
                    EStmt::Signal(c) => SOp::Signal(*c),
                    EStmt::SignalAll(c) => SOp::SignalAll(*c),
                    EStmt::Update { target, field: f, var, body } => SOp::Update {
                        target: frame.slot(target).expect("local"),
                        slot: field(f)?,
                        var: frame.slot(var).expect("local"),
                        body: cexpr(body)?,
                    },
                });
            }
            let text = m.body.iter().map(|s| estmt_to_string(s, em)).collect();
            let preds = em
                .condvars
                .iter()
                .map(|cv| resolves(&layout, &frame, &cv.pred).then(|| compile_expr(&layout, &frame, &cv.pred)))
                .collect();
            methods.push(MMethod { name: m.name.clone(), frame, body, text, preds });
        }
        let observe = methods.iter().map(|m| (0..m.frame.len()).collect()).collect();
        Ok(Machine { layout, init, locks: em.locks.len(), cv_lock: em.condvars.iter().map(|c| c.lock).collect(), methods, ops: Vec::new(), observe })
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m.name == name)
    }

    pub fn method_name(&self, m: usize) -> &str {
        &self.methods[m].name
    }

    pub fn frame(&self, m: usize) -> &Frame {
        &self.methods[m].frame
    }

    /// Operations per thread as `(method name, args)`.
    pub fn set_workload(&mut self, ops: &[Vec<(String, Vec<i64>)>]) -> Result<(), String> {
        self.ops = ops
            .iter()
            .map(|th| {
                th.iter()
                    .map(|(name, args)| {
                        let m = self.method_index(name).ok_or_else(|| format!("unknown method `{name}`"))?;
                        if self.methods[m].frame.params.len() != args.len() {
                            return Err(format!("`{name}` takes {} argument(s)", self.methods[m].frame.params.len()));
                        }
                        Ok((m, args.clone()))
                    })
                    .collect()
            })
            .collect::<Result<_, String>>()?;
        Ok(())
    }

    /// Observe only the named locals of each method, in the given order.
    pub fn set_observed(&mut self, names: &[(String, Vec<String>)]) -> Result<(), String> {
        for (m, meth) in self.methods.iter().enumerate() {
            let Some((_, want)) = names.iter().find(|(n, _)| *n == meth.name) else {
                return Err(format!("method `{}` has no counterpart", meth.name));
            };
            self.observe[m] = want
                .iter()
                .map(|w| meth.frame.slot(w).ok_or_else(|| format!("`{}` lacks local `{w}`", meth.name)))
                .collect::<Result<_, _>>()?;
        }
        Ok(())
    }

    pub fn statement(&self, e: &Event) -> String {
        format!("t{}: {} {}", e.thread, self.methods[e.method].name, self.methods[e.method].text[e.pc])
    }

    fn method_of(&self, st: &MState, t: usize) -> usize {
        self.ops[t][st.threads[t].op].0
    }

    pub fn start(&self, fields: &[i64]) -> MState {
        let threads = (0..self.ops.len())
            .map(|t| {
                let mut th = MThread { op: 0, pc: 0, seg: 0, locals: Vec::new(), status: Status::Ready, results: Vec::new() };
                match self.ops[t].first() {
                    Some((m, args)) => th.locals = self.methods[*m].frame.enter(args),
                    None => th.status = Status::Done,
                }
                th
            })
            .collect();
        let mut st = MState { fields: fields.to_vec(), threads, holder: vec![None; self.locks], reserved: vec![None; self.locks] };
        for t in 0..self.ops.len() {
            self.settle(&mut st, t);
        }
        st
    }

    /// Finish operations whose code is exhausted.
    fn settle(&self, st: &mut MState, t: usize) {
        loop {
            let th = &st.threads[t];
            if th.status != Status::Ready {
                return;
            }
            let m = self.ops[t][th.op].0;
            if th.pc < self.methods[m].body.len() {
                return;
            }
            let th = &mut st.threads[t];
            let locals = std::mem::take(&mut th.locals);
            th.results.push(locals);
            th.op += 1;
            th.pc = 0;
            th.seg = 0;
            match self.ops[t].get(th.op) {
                Some((m, args)) => th.locals = self.methods[*m].frame.enter(args),
                None => th.status = Status::Done,
            }
        }
    }

    pub fn enabled(&self, st: &MState, t: usize) -> bool {
        matches!(st.threads[t].status, Status::Ready | Status::NotifiedLock(_) | Status::NotifiedCv(_))
    }

    /// Statement thread `t` executes next.
    pub fn event(&self, st: &MState, t: usize) -> Event {
        Event { thread: t, method: self.method_of(st, t), pc: st.threads[t].pc }
    }

    fn busy(st: &MState, l: usize) -> bool {
        st.holder[l].is_some() || st.reserved[l].is_some()
    }

    /// Release `l`, handing it to each blocked thread in turn.
    fn release(st: MState, l: usize) -> Vec<MState> {
        let mut st = st;
        st.holder[l] = None;
        let blocked: Vec<usize> = (0..st.threads.len()).filter(|u| st.threads[*u].status == Status::BlockedLock(l)).collect();
        if blocked.is_empty() {
            return vec![st];
        }
        blocked
            .into_iter()
            .map(|u| {
                let mut s = st.clone();
                s.threads[u].status = Status::NotifiedLock(l);
                s.reserved[l] = Some(u);
                s
            })
            .collect()
    }

    /// All successors of one step by thread `t`, or the reason it is stuck.
    pub fn step(&self, st: &MState, t: usize) -> Step {
        let m = self.method_of(st, t);
        let meth = &self.methods[m];
        let mut s = st.clone();
        let mut out = match st.threads[t].status {
            Status::NotifiedLock(l) => {
                s.reserved[l] = None;
                s.holder[l] = Some(t);
                s.threads[t].status = Status::Ready;
                s.threads[t].pc += 1;
                vec![s]
            }
            Status::NotifiedCv(c) => {
                let l = self.cv_lock[c];
                if Self::busy(&s, l) {
                    s.threads[t].status = Status::BlockedLock(l);
                } else {
                    s.holder[l] = Some(t);
                    s.threads[t].status = Status::Ready;
                    s.threads[t].pc += 1;
                }
                vec![s]
            }
            Status::Ready => self.exec(s, t, &meth.body[st.threads[t].pc])?,
            other => return Err(format!("thread {t} is not runnable ({other:?})")),
        };
        for s in &mut out {
            self.settle(s, t);
        }
        Ok(out)
    }

    fn exec(&self, mut s: MState, t: usize, op: &SOp) -> Step {
        let lay = &self.layout;
        let err = |e: crate::exec::ExecError| e.to_string();
        let th = t;
        let lname = |l: usize| format!("l{}", l + 1);
        match op {
            SOp::Skip => s.threads[th].pc += 1,
            SOp::Mark(k) => {
                if let Some(k) = k {
                    s.threads[th].seg = *k;
                }
                s.threads[th].pc += 1;
            }
            SOp::Assign(slot, e) => {
                let v = e.eval(lay, &s.fields, &s.threads[th].locals, None).map_err(err)?;
                s.threads[th].locals[*slot] = v;
                s.threads[th].pc += 1;
            }
            SOp::Store { slot, idx, value } => {
                let locals = &s.threads[th].locals;
                let i = idx.as_ref().map(|i| i.eval(lay, &s.fields, locals, None)).transpose().map_err(err)?;
                let v = value.eval(lay, &s.fields, locals, None).map_err(err)?;
                store(lay, &mut s.fields, *slot, i, v, true, None).map_err(err)?;
                s.threads[th].pc += 1;
            }
            SOp::Update { target, slot, var, body } => {
                let old = s.fields[lay.fields[*slot].offset];
                let mut scratch = s.threads[th].locals.clone();
                scratch[*var] = old;
                let v = body.eval(lay, &s.fields, &scratch, None).map_err(err)?;
                store(lay, &mut s.fields, *slot, None, v, true, None).map_err(err)?;
                s.threads[th].locals[*target] = old;
                s.threads[th].pc += 1;
            }
            SOp::Goto(p) => s.threads[th].pc = *p,
            SOp::IfGoto(c, p) => {
                let v = c.eval(lay, &s.fields, &s.threads[th].locals, None).map_err(err)?;
                s.threads[th].pc = if v != 0 { *p } else { s.threads[th].pc + 1 };
            }
            SOp::Lock(l) => {
                if s.holder[*l] == Some(t) {
                    return Err(format!("thread {t} re-acquires {}", lname(*l)));
                }
                if Self::busy(&s, *l) {
                    s.threads[th].status = Status::BlockedLock(*l);
                } else {
                    s.holder[*l] = Some(t);
                    s.threads[th].pc += 1;
                }
            }
            SOp::Unlock(l) => {
                if s.holder[*l] != Some(t) {
                    return Err(format!("thread {t} releases {} it does not hold", lname(*l)));
                }
                s.threads[th].pc += 1;
                return Ok(Self::release(s, *l));
            }
            SOp::Await(c) => {
                let l = self.cv_lock[*c];
                if s.holder[l] != Some(t) {
                    return Err(format!("thread {t} waits on cv{} without holding {}", c + 1, lname(l)));
                }
                s.threads[th].status = Status::WaitCv(*c);
                return Ok(Self::release(s, l));
            }
            SOp::Signal(c) | SOp::SignalAll(c) => {
                let l = self.cv_lock[*c];
                if s.holder[l] != Some(t) {
                    return Err(format!("thread {t} signals cv{} without holding {}", c + 1, lname(l)));
                }
                s.threads[th].pc += 1;
                let waiting: Vec<usize> = (0..s.threads.len()).filter(|u| s.threads[*u].status == Status::WaitCv(*c)).collect();
                if matches!(op, SOp::SignalAll(_)) {
                    for u in waiting {
                        s.threads[u].status = Status::NotifiedCv(*c);
                    }
                } else if !waiting.is_empty() {
                    return Ok(waiting
                        .into_iter()
                        .map(|u| {
                            let mut n = s.clone();
                            n.threads[u].status = Status::NotifiedCv(*c);
                            n
                        })
                        .collect());
                }
            }
        }
        Ok(vec![s])
    }

    /// Verdict for a state in which no thread can move, `None` otherwise.
    pub fn terminal(&self, st: &MState) -> Option<Outcome> {
        let n = st.threads.len();
        if (0..n).any(|t| self.enabled(st, t)) {
            return None;
        }
        let lname = |l: usize| format!("l{}", l + 1);
        // Wait-for edges: blocked thread -> holder of the lock it wants.
        for start in 0..n {
            let mut seen = vec![false; n];
            let mut path = Vec::new();
            let mut cur = start;
            while let Status::BlockedLock(l) = st.threads[cur].status {
                if seen[cur] {
                    let from = path.iter().position(|(t, _)| *t == cur).unwrap();
                    let mut cycle: Vec<(usize, usize)> = path[from..].to_vec();
                    let k = (0..cycle.len()).min_by_key(|i| cycle[*i].0).unwrap();
                    cycle.rotate_left(k);
                    return Some(Outcome::Deadlock { cycle });
                }
                seen[cur] = true;
                path.push((cur, l));
                match st.holder[l] {
                    Some(h) => cur = h,
                    None => break,
                }
            }
        }
        if let Some(l) = (0..st.holder.len()).find(|l| st.holder[*l].is_some()) {
            let h = st.holder[l].unwrap();
            let why = if st.threads[h].status == Status::Done { "finished holding" } else { "waits holding" };
            return Some(Outcome::Stuck { reason: format!("thread {h} {why} {}", lname(l)) });
        }
        if (0..n).all(|t| st.threads[t].status == Status::Done) {
            return Some(Outcome::Final);
        }
        for t in 0..n {
            if let Status::WaitCv(c) = st.threads[t].status {
                let m = self.method_of(st, t);
                let holds = self.methods[m].preds[c]
                    .as_ref()
                    .and_then(|p| p.eval(&self.layout, &st.fields, &st.threads[t].locals, None).ok())
                    .is_some_and(|v| v != 0);
                if holds {
                    return Some(Outcome::Stuck { reason: format!("thread {t} missed a wakeup on cv{}", c + 1) });
                }
            }
        }
        Some(Outcome::Blocked)
    }

    /// Fields, progress and observed locals of finished operations.
    pub fn snapshot(&self, st: &MState) -> Snapshot {
        let progress = st
            .threads
            .iter()
            .enumerate()
            .map(|(t, th)| if th.status == Status::Done { (self.ops[t].len(), 0) } else { (th.op, th.seg) })
            .collect();
        let results = st
            .threads
            .iter()
            .enumerate()
            .map(|(t, th)| {
                th.results
                    .iter()
                    .enumerate()
                    .map(|(i, locals)| self.observe[self.ops[t][i].0].iter().map(|s| locals[*s]).collect())
                    .collect()
            })
            .collect();
        Snapshot { fields: st.fields.clone(), progress, results }
    }

    /// Run thread `t` alone until it starts CCR `stop` of its current
    /// operation or finishes it; any blocking or branching is an error.
    pub fn run_solo(&self, st: &mut MState, t: usize, trace: &mut Vec<Event>) -> Result<(), String> {
        let op = st.threads[t].op;
        let mut steps = 0;
        loop {
            if st.threads[t].status == Status::Done || st.threads[t].op != op {
                return Ok(());
            }
            let ev = self.event(st, t);
            if steps > 0 {
                if let SOp::Mark(Some(k)) = self.methods[ev.method].body[ev.pc] {
                    if k > st.threads[t].seg {
                        return Ok(());
                    }
                }
            }
            steps += 1;
            if steps > STEP_LIMIT {
                return Err("step limit exceeded".into());
            }
            let mut next = self.step(st, t)?;
            trace.push(ev);
            if next.len() != 1 {
                return Err(format!("`{}` has several outcomes", self.statement(&ev)));
            }
            *st = next.pop().unwrap();
            if !self.enabled(st, t) && st.threads[t].status != Status::Done {
                return Err(format!("thread {t} blocks at `{}`", self.statement(&ev)));
            }
        }
    }
}
