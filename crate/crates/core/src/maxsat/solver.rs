//! CDCL SAT core with a native weighted at-most constraint over penalty
//! literals, driven by a model-improving MaxSAT loop.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::wcnf::Wcnf;

/// Literal: `2 * var + neg`, vars 0-based.
type Lit = u32;

fn lit(dimacs: i32) -> Lit {
    let v = dimacs.unsigned_abs() - 1;
    2 * v + (dimacs < 0) as u32
}

fn var(l: Lit) -> usize {
    (l >> 1) as usize
}

fn neg(l: Lit) -> Lit {
    l ^ 1
}

const UNDEF: i8 = -1;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Reason {
    None,
    Clause(usize),
    Pb,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

/// Sum of weights of true penalty literals must not exceed `bound`.
struct Pb {
    lits: Vec<(Lit, u64)>,
    /// Per var: index into `lits`, if the var is a penalty var.
    index: Vec<Option<usize>>,
    bound: u64,
    sum: u64,
}

enum Search {
    Sat,
    Unsat,
    Timeout,
}

struct Sat {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    pb_reason: Vec<Vec<Lit>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: Heap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    pb: Pb,
    unsat: bool,
    conflicts: u64,
    learnts: usize,
    max_learnts: usize,
}

/// Binary max-heap of variables keyed by activity.
struct Heap {
    data: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl Heap {
    fn new(n: usize) -> Self {
        Heap { data: Vec::new(), pos: vec![None; n] }
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.data[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.data[p]] >= act[v] {
                break;
            }
            self.data[i] = self.data[p];
            self.pos[self.data[i]] = Some(i);
            i = p;
        }
        self.data[i] = v;
        self.pos[v] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.data[i];
        let n = self.data.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let c = if l + 1 < n && act[self.data[l + 1]] > act[self.data[l]] { l + 1 } else { l };
            if act[self.data[c]] <= act[v] {
                break;
            }
            self.data[i] = self.data[c];
            self.pos[self.data[i]] = Some(i);
            i = c;
        }
        self.data[i] = v;
        self.pos[v] = Some(i);
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.data.push(v);
        let i = self.data.len() - 1;
        self.pos[v] = Some(i);
        self.up(i, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.data.is_empty() {
            return None;
        }
        let top = self.data[0];
        let last = self.data.pop().unwrap();
        self.pos[top] = None;
        if !self.data.is_empty() {
            self.data[0] = last;
            self.pos[last] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }
}

fn luby(mut x: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

impl Sat {
    fn new(nvars: usize, penalties: Vec<(Lit, u64)>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let activity: Vec<f64> = (0..nvars).map(|_| rng.gen::<f64>() * 1e-5).collect();
        let mut index = vec![None; nvars];
        let mut polarity = vec![false; nvars];
        for (i, (l, _)) in penalties.iter().enumerate() {
            index[var(*l)] = Some(i);
            // Prefer the penalty literal false.
            polarity[var(*l)] = l & 1 == 1;
        }
        let bound = penalties.iter().map(|p| p.1).sum();
        let mut heap = Heap::new(nvars);
        for v in 0..nvars {
            heap.insert(v, &activity);
        }
        Sat {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * nvars],
            assigns: vec![UNDEF; nvars],
            level: vec![0; nvars],
            reason: vec![Reason::None; nvars],
            pb_reason: vec![Vec::new(); nvars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            cla_inc: 1.0,
            heap,
            polarity,
            seen: vec![false; nvars],
            pb: Pb { lits: penalties, index, bound, sum: 0 },
            unsat: false,
            conflicts: 0,
            learnts: 0,
            max_learnts: 2000,
        }
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assigns[var(l)];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (l & 1) as i8
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, r: Reason) {
        let v = var(l);
        self.assigns[v] = (l & 1 == 0) as i8;
        self.level[v] = self.decision_level();
        self.reason[v] = r;
        self.trail.push(l);
        if let Some(i) = self.pb.index[v] {
            if self.pb.lits[i].0 == l {
                self.pb.sum += self.pb.lits[i].1;
            }
        }
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == neg(w[1])) {
            return;
        }
        c.retain(|l| self.value(*l) != 0);
        if c.iter().any(|l| self.value(*l) == 1) {
            return;
        }
        match c.len() {
            0 => self.unsat = true,
            1 => {
                self.enqueue(c[0], Reason::None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                self.attach(c, false);
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> usize {
        let id = self.clauses.len();
        self.watches[neg(lits[0]) as usize].push(id);
        self.watches[neg(lits[1]) as usize].push(id);
        self.clauses.push(Clause { lits, learnt, activity: 0.0 });
        if learnt {
            self.learnts += 1;
        }
        id
    }

    /// Literals of the reason for `v` with the implied literal first.
    fn reason_lits(&self, v: usize) -> &[Lit] {
        match self.reason[v] {
            Reason::Clause(c) => &self.clauses[c].lits,
            Reason::Pb => &self.pb_reason[v],
            Reason::None => &[],
        }
    }

    /// Penalty literals currently true, negated.
    fn pb_core(&self) -> Vec<Lit> {
        self.pb.lits.iter().filter(|(l, _)| self.value(*l) == 1).map(|(l, _)| neg(*l)).collect()
    }

    /// Enforce the weight bound; returns a conflict clause if violated.
    fn propagate_pb(&mut self) -> Option<Vec<Lit>> {
        if self.pb.sum > self.pb.bound {
            return Some(self.pb_core());
        }
        let slack = self.pb.bound - self.pb.sum;
        let forced: Vec<Lit> =
            self.pb.lits.iter().filter(|(l, w)| *w > slack && self.value(*l) == UNDEF).map(|(l, _)| *l).collect();
        if forced.is_empty() {
            return None;
        }
        let core = self.pb_core();
        for l in forced {
            let mut r = Vec::with_capacity(core.len() + 1);
            r.push(neg(l));
            r.extend_from_slice(&core);
            self.pb_reason[var(l)] = r;
            self.enqueue(neg(l), Reason::Pb);
        }
        None
    }

    /// Unit propagation; returns the literals of a conflicting constraint.
    fn propagate(&mut self) -> Option<Vec<Lit>> {
        if let Some(c) = self.propagate_pb() {
            return Some(c);
        }
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = neg(p);
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cid = ws[i];
                let c = &mut self.clauses[cid].lits;
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let fv = {
                    let a = self.assigns[var(first)];
                    if a == UNDEF { UNDEF } else { a ^ (first & 1) as i8 }
                };
                if fv == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    let a = self.assigns[var(l)];
                    if a == UNDEF || (a ^ (l & 1) as i8) == 1 {
                        c.swap(1, k);
                        let nl = c[1];
                        self.watches[neg(nl) as usize].push(cid);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if fv == 0 {
                    conflict = Some(self.clauses[cid].lits.clone());
                    break;
                }
                self.enqueue(first, Reason::Clause(cid));
                i += 1;
            }
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
            if self.pb.index[var(p)].is_some() {
                if let Some(c) = self.propagate_pb() {
                    self.qhead = self.trail.len();
                    return Some(c);
                }
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn analyze(&mut self, confl: Vec<Lit>) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![0];
        let mut counter = 0;
        let mut idx = self.trail.len();
        let mut reason: Vec<Lit> = confl;
        let mut skip_first = false;
        let cur = self.decision_level();
        loop {
            for (k, &q) in reason.iter().enumerate() {
                if skip_first && k == 0 {
                    continue;
                }
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] == cur {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            let p = self.trail[idx];
            let v = var(p);
            self.seen[v] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = neg(p);
                break;
            }
            if let Reason::Clause(c) = self.reason[v] {
                self.clauses[c].activity += self.cla_inc;
            }
            reason = self.reason_lits(v).to_vec();
            skip_first = true;
        }
        for l in &learnt[1..] {
            self.seen[var(*l)] = false;
        }
        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[var(learnt[i])] > self.level[var(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[var(learnt[1])]
        };
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = var(l);
            if let Some(k) = self.pb.index[v] {
                if self.pb.lits[k].0 == l {
                    self.pb.sum -= self.pb.lits[k].1;
                }
            }
            self.polarity[v] = l & 1 == 0;
            self.assigns[v] = UNDEF;
            self.reason[v] = Reason::None;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn reduce_db(&mut self) {
        let locked: Vec<bool> = {
            let mut lk = vec![false; self.clauses.len()];
            for v in 0..self.assigns.len() {
                if self.assigns[v] != UNDEF {
                    if let Reason::Clause(c) = self.reason[v] {
                        lk[c] = true;
                    }
                }
            }
            lk
        };
        let mut acts: Vec<f64> =
            self.clauses.iter().enumerate().filter(|(i, c)| c.learnt && !locked[*i] && c.lits.len() > 2).map(|(_, c)| c.activity).collect();
        if acts.is_empty() {
            return;
        }
        acts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cut = acts[acts.len() / 2];
        let mut remap = vec![usize::MAX; self.clauses.len()];
        let mut kept = Vec::with_capacity(self.clauses.len());
        for (i, c) in std::mem::take(&mut self.clauses).into_iter().enumerate() {
            if c.learnt && !locked[i] && c.lits.len() > 2 && c.activity < cut {
                self.learnts -= 1;
                continue;
            }
            remap[i] = kept.len();
            kept.push(c);
        }
        self.clauses = kept;
        for r in self.reason.iter_mut() {
            if let Reason::Clause(c) = r {
                *c = remap[*c];
            }
        }
        for w in self.watches.iter_mut() {
            w.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            self.watches[neg(c.lits[0]) as usize].push(i);
            self.watches[neg(c.lits[1]) as usize].push(i);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(2 * v as u32 + (!self.polarity[v]) as u32);
            }
        }
        None
    }

    fn search(&mut self, deadline: Option<Instant>) -> Search {
        if self.unsat {
            return Search::Unsat;
        }
        let mut restart = 0u64;
        loop {
            let limit = luby(restart) * 100;
            restart += 1;
            let mut local = 0u64;
            loop {
                if let Some(confl) = self.propagate() {
                    self.conflicts += 1;
                    local += 1;
                    if self.decision_level() == 0 {
                        self.unsat = true;
                        return Search::Unsat;
                    }
                    let (learnt, bt) = self.analyze(confl);
                    self.cancel_until(bt);
                    if learnt.len() == 1 {
                        self.enqueue(learnt[0], Reason::None);
                    } else {
                        let first = learnt[0];
                        let id = self.attach(learnt, true);
                        self.clauses[id].activity = self.cla_inc;
                        self.enqueue(first, Reason::Clause(id));
                    }
                    self.var_inc /= 0.95;
                    self.cla_inc /= 0.999;
                    if self.conflicts % 256 == 0 {
                        if let Some(d) = deadline {
                            if Instant::now() >= d {
                                return Search::Timeout;
                            }
                        }
                    }
                } else {
                    if local >= limit {
                        self.cancel_until(0);
                        break;
                    }
                    if self.learnts > self.max_learnts + self.trail.len() {
                        self.reduce_db();
                        self.max_learnts += self.max_learnts / 10;
                    }
                    match self.pick_branch() {
                        None => return Search::Sat,
                        Some(l) => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(l, Reason::None);
                        }
                    }
                }
            }
        }
    }

    fn set_bound(&mut self, bound: u64) {
        self.cancel_until(0);
        self.pb.bound = bound;
        if self.propagate().is_some() {
            self.unsat = true;
        }
    }

    fn model(&self) -> Vec<bool> {
        self.assigns.iter().map(|a| *a == 1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    /// Time ran out; the model is the best found so far.
    Timeout,
    Unsat,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    /// Value per variable (index = DIMACS var - 1); empty if none found.
    pub model: Vec<bool>,
    /// Total weight of falsified soft clauses.
    pub cost: u64,
    pub conflicts: u64,
}

impl Outcome {
    pub fn has_model(&self) -> bool {
        self.status == Status::Optimal || !self.model.is_empty()
    }
}

/// Exact weighted partial MaxSAT by repeatedly tightening the cost bound.
pub fn solve(w: &Wcnf, deadline: Option<Instant>, seed: u64) -> Outcome {
    let mut nvars = w.nvars;
    let mut penalties = Vec::new();
    let mut relax = Vec::new();
    for (c, wt) in w.soft.iter().map(|s| (&s.lits, s.weight)) {
        match c.as_slice() {
            [] => {}
            [l] => penalties.push((neg(lit(*l)), wt)),
            _ => {
                nvars += 1;
                let r = 2 * (nvars as u32 - 1);
                relax.push((c.clone(), r));
                penalties.push((r, wt));
            }
        }
    }
    let empty_cost: u64 = w.soft.iter().filter(|s| s.lits.is_empty()).map(|s| s.weight).sum();
    let mut s = Sat::new(nvars, penalties, seed);
    for c in &w.hard {
        let ls: Vec<Lit> = c.iter().map(|l| lit(*l)).collect();
        s.add_clause(&ls);
    }
    for (c, r) in relax {
        let mut ls: Vec<Lit> = c.iter().map(|l| lit(*l)).collect();
        ls.push(r);
        s.add_clause(&ls);
    }
    let mut best: Option<(Vec<bool>, u64)> = None;
    let status = loop {
        match s.search(deadline) {
            Search::Sat => {
                let m = s.model();
                let cost = w.cost(&m[..w.nvars]);
                let penalty = cost - empty_cost;
                best = Some((m[..w.nvars].to_vec(), cost));
                if penalty == 0 {
                    break Status::Optimal;
                }
                s.set_bound(penalty - 1);
            }
            Search::Unsat => break if best.is_some() { Status::Optimal } else { Status::Unsat },
            Search::Timeout => break Status::Timeout,
        }
    };
    let conflicts = s.conflicts;
    match best {
        Some((model, cost)) => Outcome { status, model, cost, conflicts },
        None => Outcome { status, model: vec![], cost: 0, conflicts },
    }
}
