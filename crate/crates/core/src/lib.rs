// SPDX-License-Identifier: Apache-2.0

//! Combinational equivalence checking of XOR-AND graphs with three
//! cooperating engines: CDCL SAT (with divide and conquer), BDDs and
//! exhaustive bit-parallel simulation, chosen per obligation by a
//! runtime-prediction scheduler inside a sweeping flow.

pub mod aiger;
pub mod bdd;
pub mod bench;
pub mod check;
pub mod cnf;
pub mod cone;
pub mod cube;
pub mod error;
pub mod es;
pub mod features;
pub mod gen;
pub mod miter;
pub mod sat;
pub mod sched;
pub mod sweep;
pub mod xag;
pub mod xor_detect;

pub use check::{Budget, CancelToken, CheckResult, UnknownReason};
pub use error::{AigerError, XagError};
pub use xag::{Gate, GateKind, Lit, Xag, XagBuilder};
