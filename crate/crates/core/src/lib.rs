//! Synthesis of fine-grained explicit-synchronization monitors from
//! implicit monitors written with `waituntil` guards.
//!
//! The pipeline: [`frontend`] parses and desugars a `.imon` source, [`fdg`]
//! splits every method into fragments, [`analysis`] finds races, atomic
//! candidates and safe interleavings, [`maxsat`] picks locks and atomics,
//! [`codegen`] instruments the monitor and [`simulator`] checks the result
//! against the implicit semantics.

pub mod analysis;
pub mod cli;
pub mod codegen;
pub mod exec;
pub mod fdg;
pub mod frontend;
pub mod maxsat;
pub mod simulator;
