//! `.work` files: per-thread operation lists, initial fields, exploration mode.
//!
//! ```json
//! {"threads": [[{"method": "put", "args": [1]}], [{"method": "take"}]],
//!  "init": {"count": 0},
//!  "mode": "exhaustive"}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Layout;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Op {
    pub method: String,
    #[serde(default)]
    pub args: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "ModeRepr", into = "ModeRepr")]
pub enum Mode {
    #[default]
    Exhaustive,
    /// Sample this many random schedules.
    Random { runs: usize, seed: Option<u64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ModeRepr {
    Name(String),
    Random {
        random: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl TryFrom<ModeRepr> for Mode {
    type Error = String;

    fn try_from(r: ModeRepr) -> Result<Mode, String> {
        match r {
            ModeRepr::Name(n) if n == "exhaustive" => Ok(Mode::Exhaustive),
            ModeRepr::Name(n) => Err(format!("unknown mode `{n}`")),
            ModeRepr::Random { random, seed } => Ok(Mode::Random { runs: random, seed }),
        }
    }
}

impl From<Mode> for ModeRepr {
    fn from(m: Mode) -> ModeRepr {
        match m {
            Mode::Exhaustive => ModeRepr::Name("exhaustive".into()),
            Mode::Random { runs, seed } => ModeRepr::Random { random: runs, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Workload {
    pub threads: Vec<Vec<Op>>,
    /// Field overrides; arrays take a list.
    #[serde(default)]
    pub init: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("bad workload JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown method `{0}`")]
    Method(String),
    #[error("`{method}` takes {expected} argument(s), got {got}")]
    Arity { method: String, expected: usize, got: usize },
    #[error("argument {value} of `{method}` outside its domain")]
    ArgDomain { method: String, value: i64 },
    #[error("unknown field `{0}` in init")]
    Field(String),
    #[error("bad initial value for `{0}`")]
    Value(String),
}

impl Workload {
    pub fn parse(src: &str) -> Result<Workload, WorkloadError> {
        Ok(serde_json::from_str(src)?)
    }

    pub fn ops(&self) -> usize {
        self.threads.iter().map(Vec::len).sum()
    }

    /// Initial field vector: declared initializers, then overrides.
    pub fn initial_state(&self, layout: &Layout, declared: &[i64]) -> Result<Vec<i64>, WorkloadError> {
        let mut st = declared.to_vec();
        for (name, v) in &self.init {
            let slot = layout.slot(name).ok_or_else(|| WorkloadError::Field(name.clone()))?;
            let f = &layout.fields[slot];
            let vals: Vec<i64> = match v {
                serde_json::Value::Array(a) => a.iter().map(|x| x.as_i64().ok_or_else(|| WorkloadError::Value(name.clone()))).collect::<Result<_, _>>()?,
                serde_json::Value::Bool(b) => vec![*b as i64],
                other => vec![other.as_i64().ok_or_else(|| WorkloadError::Value(name.clone()))?],
            };
            let vals = if vals.len() == 1 && f.is_array { vec![vals[0]; f.len] } else { vals };
            if vals.len() != f.len || vals.iter().any(|x| !f.range.contains(*x)) {
                return Err(WorkloadError::Value(name.clone()));
            }
            st[f.offset..f.offset + f.len].copy_from_slice(&vals);
        }
        Ok(st)
    }
}
