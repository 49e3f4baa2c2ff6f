//! Weighted partial MaxSAT instances and the WCNF text format.

use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

/// Soft-constraint family a clause belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    MaxPar,
    MinLock,
    MinAtom,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Soft {
    pub lits: Vec<i32>,
    pub weight: u64,
    pub family: Family,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Wcnf {
    pub nvars: usize,
    pub hard: Vec<Vec<i32>>,
    pub soft: Vec<Soft>,
    /// Name of each variable; index = DIMACS var - 1.
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WcnfError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
}

fn holds(model: &[bool], l: i32) -> bool {
    let v = model.get(l.unsigned_abs() as usize - 1).copied().unwrap_or(false);
    if l > 0 {
        v
    } else {
        !v
    }
}

impl Wcnf {
    pub fn new_var(&mut self, name: impl Into<String>) -> i32 {
        self.nvars += 1;
        self.names.push(name.into());
        self.nvars as i32
    }

    pub fn add_hard(&mut self, c: Vec<i32>) {
        self.hard.push(c);
    }

    pub fn add_soft(&mut self, c: Vec<i32>, weight: u64, family: Family) {
        self.soft.push(Soft { lits: c, weight, family });
    }

    pub fn top(&self) -> u64 {
        self.soft.iter().map(|s| s.weight).sum::<u64>() + 1
    }

    pub fn clause_holds(model: &[bool], c: &[i32]) -> bool {
        c.iter().any(|l| holds(model, *l))
    }

    pub fn hard_ok(&self, model: &[bool]) -> bool {
        self.hard.iter().all(|c| Self::clause_holds(model, c))
    }

    /// Weight of falsified soft clauses.
    pub fn cost(&self, model: &[bool]) -> u64 {
        self.soft.iter().filter(|s| !Self::clause_holds(model, &s.lits)).map(|s| s.weight).sum()
    }

    /// Weight of satisfied soft clauses.
    pub fn satisfied(&self, model: &[bool]) -> u64 {
        self.soft.iter().filter(|s| Self::clause_holds(model, &s.lits)).map(|s| s.weight).sum()
    }

    /// Satisfied weight per family.
    pub fn breakdown(&self, model: &[bool]) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for fam in [Family::MaxPar, Family::MinLock, Family::MinAtom, Family::Other] {
            let of: Vec<&Soft> = self.soft.iter().filter(|s| s.family == fam).collect();
            if of.is_empty() && fam == Family::Other {
                continue;
            }
            let sat: Vec<&&Soft> = of.iter().filter(|s| Self::clause_holds(model, &s.lits)).collect();
            let key = serde_json::to_value(fam).unwrap().as_str().unwrap().to_string();
            m.insert(
                key,
                serde_json::json!({
                    "satisfied": sat.len(),
                    "total": of.len(),
                    "weight": sat.iter().map(|s| s.weight).sum::<u64>(),
                }),
            );
        }
        serde_json::Value::Object(m)
    }

    pub fn to_wcnf_string(&self) -> String {
        let top = self.top();
        let mut s = String::new();
        writeln!(s, "p wcnf {} {} {}", self.nvars, self.hard.len() + self.soft.len(), top).unwrap();
        for c in &self.hard {
            write!(s, "{top}").unwrap();
            for l in c {
                write!(s, " {l}").unwrap();
            }
            s.push_str(" 0\n");
        }
        for c in &self.soft {
            write!(s, "{}", c.weight).unwrap();
            for l in &c.lits {
                write!(s, " {l}").unwrap();
            }
            s.push_str(" 0\n");
        }
        s
    }

    /// Variable map: name -> DIMACS index.
    pub fn var_map_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for (i, n) in self.names.iter().enumerate() {
            m.insert(n.clone(), serde_json::json!(i + 1));
        }
        serde_json::Value::Object(m)
    }

    pub fn parse(text: &str) -> Result<Wcnf, WcnfError> {
        let mut w = Wcnf::default();
        let mut top: Option<u64> = None;
        let mut pending: Vec<i64> = Vec::new();
        let mut pending_line = 0;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() < 4 || parts[1] != "wcnf" {
                    return Err(WcnfError::Syntax(no + 1, "expected `p wcnf <vars> <clauses> [top]`".into()));
                }
                w.nvars = parts[2].parse().map_err(|_| WcnfError::Syntax(no + 1, "bad variable count".into()))?;
                top = match parts.get(4) {
                    Some(t) => Some(t.parse().map_err(|_| WcnfError::Syntax(no + 1, "bad top".into()))?),
                    None => None,
                };
                continue;
            }
            for tok in line.split_whitespace() {
                let v: i64 = tok.parse().map_err(|_| WcnfError::Syntax(no + 1, format!("bad token `{tok}`")))?;
                if pending.is_empty() {
                    pending_line = no + 1;
                }
                if v == 0 && !pending.is_empty() {
                    let weight = pending[0];
                    if weight <= 0 {
                        return Err(WcnfError::Syntax(pending_line, "weight must be positive".into()));
                    }
                    let lits: Vec<i32> = pending[1..].iter().map(|l| *l as i32).collect();
                    for l in &lits {
                        let a = l.unsigned_abs() as usize;
                        if a > w.nvars {
                            w.nvars = a;
                        }
                    }
                    if top.is_some_and(|t| weight as u64 >= t) {
                        w.hard.push(lits);
                    } else {
                        w.soft.push(Soft { lits, weight: weight as u64, family: Family::Other });
                    }
                    pending.clear();
                } else {
                    pending.push(v);
                }
            }
        }
        if !pending.is_empty() {
            return Err(WcnfError::Syntax(pending_line, "clause not terminated by 0".into()));
        }
        w.names = (1..=w.nvars).map(|i| format!("x{i}")).collect();
        Ok(w)
    }
}
