// SPDX-License-Identifier: Apache-2.0

//! SAT engine: CDCL solving of Tseitin encodings and structure-aware
//! divide and conquer.

pub mod cdcl;
pub mod dnc;
pub mod score;

use std::time::{Duration, Instant};

use crate::check::{verify_witness, CheckResult, UnknownReason};
use crate::cnf::{model_inputs, tseitin, CnfFormula};
use crate::xag::Xag;

pub use cdcl::{SolveLimits, SolveStatus, Solver, SolverStats};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatVerdict {
    /// Model indexed by DIMACS variable (entry 0 unused).
    Sat(Vec<bool>),
    Unsat,
    Unknown(UnknownReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatResult {
    pub verdict: SatVerdict,
    pub stats: SolverStats,
    pub wall: Duration,
}

fn interrupt_reason(limits: &SolveLimits) -> UnknownReason {
    limits.budget.stop_reason().unwrap_or(UnknownReason::Limit)
}

/// Solves `cnf` under DIMACS `assumptions`.
pub fn solve_cdcl(cnf: &CnfFormula, assumptions: &[i32], limits: &SolveLimits) -> SatResult {
    let start = Instant::now();
    let mut s = Solver::new();
    s.reserve_vars(cnf.num_vars);
    let mut ok = true;
    for c in &cnf.clauses {
        if !s.add_clause(c) {
            ok = false;
            break;
        }
    }
    let verdict = if !ok {
        SatVerdict::Unsat
    } else {
        match s.solve(assumptions, limits) {
            SolveStatus::Sat => SatVerdict::Sat(s.model().to_vec()),
            SolveStatus::Unsat => SatVerdict::Unsat,
            SolveStatus::Interrupted => SatVerdict::Unknown(interrupt_reason(limits)),
        }
    };
    SatResult {
        verdict,
        stats: s.stats.clone(),
        wall: start.elapsed(),
    }
}

/// Checks that the single output of `xag` is constant zero with one CDCL
/// run. Counterexamples are verified by evaluation before being returned.
pub fn sat_check(xag: &Xag, limits: &SolveLimits) -> (CheckResult, SatResult) {
    let cnf = tseitin(xag, true);
    let r = solve_cdcl(&cnf, &[], limits);
    let verdict = match &r.verdict {
        SatVerdict::Unsat => CheckResult::Equivalent,
        SatVerdict::Sat(model) => {
            let w = model_inputs(xag, model);
            assert!(
                verify_witness(xag, &w),
                "SAT model does not evaluate the output to 1"
            );
            CheckResult::Counterexample(w)
        }
        SatVerdict::Unknown(why) => CheckResult::Unknown(*why),
    };
    (verdict, r)
}
