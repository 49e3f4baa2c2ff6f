//! Protocol synthesis: encoding, embedded MaxSAT solver, extraction.

pub mod encode;
pub mod protocol;
pub mod solver;
pub mod wcnf;

pub use encode::{compute_max_locks, encode, Encoding, Problem, Race, Weights};
pub use protocol::{extract_protocol, parse_model, synthesize, Protocol, SynthError, SynthOptions, Synthesis};
pub use solver::{solve, Outcome, Status};
pub use wcnf::{Family, Soft, Wcnf, WcnfError};
