//! Implicit-monitor language: parsing, desugaring and access sets.
//!
//! ```text
//! monitor Counter {
//!   int[0..3] n := 0;
//!   inc() { waituntil(n < 3); n++; }
//! }
//! ```

pub mod access;
pub mod ast;
pub mod desugar;
pub mod lexer;
pub mod parser;
pub mod pretty;

use thiserror::Error;

pub use access::{predicate_rw, read_write_sets, AccessPath, Index, RwSets};
pub use ast::*;
pub use desugar::desugar;
pub use parser::parse_monitor;
pub use pretty::{expr_to_string, monitor_to_string, stmt_to_string};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: guard has side effects")]
    GuardSideEffect { line: usize, col: usize },
    #[error("{line}:{col}: initializer {value} of `{name}` outside domain [{lo}..{hi}]")]
    InitOutOfDomain { line: usize, col: usize, name: String, value: i64, lo: i64, hi: i64 },
    #[error("{line}:{col}: waituntil only heads a CCR")]
    MisplacedWaituntil { line: usize, col: usize },
    #[error("{line}:{col}: duplicate declaration `{name}`")]
    Duplicate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: unresolved label `{name}`")]
    UnresolvedLabel { line: usize, col: usize, name: String },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Undeclared { line, col, .. }
            | ParseError::GuardSideEffect { line, col }
            | ParseError::InitOutOfDomain { line, col, .. }
            | ParseError::MisplacedWaituntil { line, col }
            | ParseError::Duplicate { line, col, .. }
            | ParseError::UnresolvedLabel { line, col, .. } => (*line, *col),
        }
    }
}

/// Parse and desugar in one step.
pub fn load(src: &str) -> Result<MonitorAst, ParseError> {
    Ok(desugar(&parse_monitor(src)?))
}
