//! Implicit and explicit execution, schedule exploration and checking.

pub mod check;
pub mod explore;
pub mod implicit;
pub mod machine;
pub mod workload;

pub use check::{check_correctness, CheckError, Harness, Report};
pub use explore::{explore, sample, Exploration, Witness, DEFAULT_STATE_BUDGET};
pub use implicit::{BoundOp, Implicit, ImplicitEnd, ImplicitHistory, ImplicitRun, Snapshot};
pub use machine::{Event, MState, Machine, Outcome, Status};
pub use workload::{Mode, Op, Workload, WorkloadError};
