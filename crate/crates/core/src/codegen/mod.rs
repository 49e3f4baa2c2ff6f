//! Signal placement, instrumentation and the explicit-monitor language.

pub mod explicit;
pub mod instrument;
pub mod lockscan;
pub mod mutate;
pub mod signals;

pub use explicit::{emit, emit_pseudo_java, estmt_to_string, parse_explicit, CondVar, EField, EMethod, EStmt, ExplicitMonitor};
pub use instrument::{instrument, CodegenError, Instrumented};
pub use lockscan::{scan_locks, HeldSets, LockViolation};
pub use mutate::{drop_last_unlock, swap_first_acquire};
pub use signals::place_signals;
