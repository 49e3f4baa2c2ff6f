//! Protocol extraction and the lock-bound iteration.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use super::encode::{compute_max_locks, encode, Encoding, Problem, Weights};
use super::solver::{solve, Outcome, Status};
use super::wcnf::Wcnf;

/// Locks per fragment, atomic fields and the lock of each condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Protocol {
    pub locks: usize,
    /// 0-based lock indices per fragment.
    pub held: Vec<BTreeSet<usize>>,
    pub atomics: BTreeSet<String>,
    /// Lock hosting each predicate's condition variable.
    pub cv_lock: Vec<Option<usize>>,
}

impl Protocol {
    /// Race-free pairs and how many of them hold disjoint lock sets.
    pub fn parallel_pairs(&self, p: &Problem) -> (usize, usize) {
        let disjoint = p.race_free.iter().filter(|(a, b)| self.held[*a].is_disjoint(&self.held[*b])).count();
        (p.race_free.len(), disjoint)
    }

    /// Every fragment on lock 0, no atomics.
    pub fn global_lock(p: &Problem) -> Protocol {
        Protocol {
            locks: 1,
            held: vec![BTreeSet::from([0]); p.len()],
            atomics: BTreeSet::new(),
            cv_lock: vec![Some(0); p.preds.len()],
        }
    }
}

/// Read the protocol off a model; unused lock indices are dropped.
pub fn extract_protocol(p: &Problem, enc: &Encoding, model: &[bool]) -> Protocol {
    let val = |v: i32| model.get(v as usize - 1).copied().unwrap_or(false);
    let raw: Vec<BTreeSet<usize>> =
        enc.hold.iter().map(|hs| hs.iter().enumerate().filter(|(_, v)| val(**v)).map(|(j, _)| j).collect()).collect();
    let used: BTreeSet<usize> = raw.iter().flatten().copied().collect();
    let rank = |j: usize| used.iter().position(|u| *u == j).unwrap();
    let held: Vec<BTreeSet<usize>> = raw.iter().map(|s| s.iter().map(|j| rank(*j)).collect()).collect();
    let atomics = enc.atomic.iter().filter(|(_, v)| val(**v)).map(|(f, _)| f.clone()).collect();
    let cv_lock = p.waiters().iter().map(|ws| ws.first().and_then(|w| held[*w].iter().next().copied())).collect();
    Protocol { locks: used.len(), held, atomics, cv_lock }
}

#[derive(Debug, Clone, Error)]
pub enum SynthError {
    #[error("solver timed out at lock bound 1")]
    Timeout,
    #[error("hard constraints unsatisfiable at lock bound {0}")]
    Unsat(usize),
    #[error("external solver: {0}")]
    External(String),
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub max_locks: Option<usize>,
    pub weights: Weights,
    pub timeout: Duration,
    pub seed: u64,
    /// Write each instance here (`{i}` is replaced by the bound).
    pub wcnf_out: Option<PathBuf>,
    pub solver_cmd: Option<String>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_locks: None,
            weights: Weights::default(),
            timeout: Duration::from_secs(30),
            seed: 0,
            wcnf_out: None,
            solver_cmd: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Iteration {
    pub bound: usize,
    pub status: Status,
    pub cost: u64,
    pub satisfied: u64,
    pub vars: usize,
    pub clauses: usize,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub protocol: Protocol,
    pub bound: usize,
    pub upper_bound: usize,
    pub iterations: Vec<Iteration>,
    pub encoding: Encoding,
    pub model: Vec<bool>,
}

impl Synthesis {
    pub fn objective_json(&self) -> serde_json::Value {
        json!({
            "satisfied": self.encoding.wcnf.satisfied(&self.model),
            "cost": self.encoding.wcnf.cost(&self.model),
            "families": self.encoding.wcnf.breakdown(&self.model),
        })
    }
}

/// Run an external WCNF solver on `path` and read its `v` line.
pub fn run_external(cmd: &str, path: &std::path::Path, w: &Wcnf) -> Result<Outcome, SynthError> {
    let mut parts = cmd.split_whitespace();
    let prog = parts.next().ok_or_else(|| SynthError::External("empty command".into()))?;
    let out = Command::new(prog)
        .args(parts)
        .arg(path)
        .output()
        .map_err(|e| SynthError::External(format!("{prog}: {e}")))?;
    let text = String::from_utf8_lossy(&out.stdout);
    let said = |s: &str| text.lines().any(|l| l.trim() == s);
    let Some(model) = parse_model(&text, w.nvars) else {
        let status = if said("s UNSATISFIABLE") {
            Status::Unsat
        } else if said("s UNKNOWN") {
            Status::Timeout
        } else {
            return Err(SynthError::External("no `v` line in solver output".into()));
        };
        return Ok(Outcome { status, model: vec![], cost: 0, conflicts: 0 });
    };
    let status = if said("s OPTIMUM FOUND") { Status::Optimal } else { Status::Timeout };
    Ok(Outcome { status, cost: w.cost(&model), model, conflicts: 0 })
}

/// Parse `v` lines: either signed literals or one 0/1 string.
pub fn parse_model(text: &str, nvars: usize) -> Option<Vec<bool>> {
    let mut model = vec![false; nvars];
    let mut found = false;
    for line in text.lines() {
        let Some(rest) = line.trim().strip_prefix('v') else { continue };
        found = true;
        let rest = rest.trim();
        if !rest.is_empty() && rest.chars().all(|c| c == '0' || c == '1') && !rest.contains(' ') && rest.len() > 1 {
            for (i, c) in rest.chars().enumerate().take(nvars) {
                model[i] = c == '1';
            }
            continue;
        }
        for tok in rest.split_whitespace() {
            let l: i64 = tok.parse().ok()?;
            if l != 0 && (l.unsigned_abs() as usize) <= nvars {
                model[l.unsigned_abs() as usize - 1] = l > 0;
            }
        }
    }
    found.then_some(model)
}

fn solve_one(enc: &Encoding, bound: usize, opts: &SynthOptions) -> Result<Outcome, SynthError> {
    let path = opts.wcnf_out.as_ref().map(|p| PathBuf::from(p.to_string_lossy().replace("{i}", &bound.to_string())));
    if let Some(path) = &path {
        std::fs::write(path, enc.wcnf.to_wcnf_string()).map_err(|e| SynthError::External(e.to_string()))?;
        let map = path.with_extension("vars.json");
        std::fs::write(&map, serde_json::to_string_pretty(&enc.wcnf.var_map_json()).unwrap())
            .map_err(|e| SynthError::External(e.to_string()))?;
    }
    match &opts.solver_cmd {
        Some(cmd) => {
            let tmp;
            let p = match &path {
                Some(p) => p.clone(),
                None => {
                    tmp = std::env::temp_dir().join(format!("monweaver-{}-{bound}.wcnf", std::process::id()));
                    std::fs::write(&tmp, enc.wcnf.to_wcnf_string()).map_err(|e| SynthError::External(e.to_string()))?;
                    tmp
                }
            };
            run_external(cmd, &p, &enc.wcnf)
        }
        None => Ok(solve(&enc.wcnf, Some(Instant::now() + opts.timeout), opts.seed)),
    }
}

/// Try lock bounds 1, 2, ... and keep the best protocol; stop at the
/// first bound that does not lower the cost, or on timeout.
pub fn synthesize(p: &Problem, opts: &SynthOptions) -> Result<Synthesis, SynthError> {
    let upper = compute_max_locks(p);
    let upper = opts.max_locks.map_or(upper, |m| m.max(1));
    let mut best: Option<Synthesis> = None;
    let mut iterations = Vec::new();
    for i in 1..=upper {
        let enc = encode(p, i, &opts.weights);
        let out = solve_one(&enc, i, opts)?;
        if !out.has_model() {
            if out.status == Status::Timeout && i == 1 {
                return Err(SynthError::Timeout);
            }
            if out.status == Status::Unsat {
                return Err(SynthError::Unsat(i));
            }
            break;
        }
        iterations.push(Iteration {
            bound: i,
            status: out.status,
            cost: out.cost,
            satisfied: enc.wcnf.satisfied(&out.model),
            vars: enc.wcnf.nvars,
            clauses: enc.wcnf.hard.len() + enc.wcnf.soft.len(),
        });
        let improves = best.as_ref().is_none_or(|b| out.cost < b.encoding.wcnf.cost(&b.model));
        if improves {
            let protocol = extract_protocol(p, &enc, &out.model);
            best = Some(Synthesis { protocol, bound: i, upper_bound: upper, iterations: vec![], encoding: enc, model: out.model });
        }
        if !improves || out.status == Status::Timeout {
            break;
        }
    }
    let mut s = best.ok_or(SynthError::Timeout)?;
    s.iterations = iterations;
    Ok(s)
}
