// SPDX-License-Identifier: Apache-2.0

//! Engine-layer result contract, cancellation tokens and time budgets.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::xag::Xag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnknownReason {
    Timeout,
    Cancelled,
    /// Node or memory limit reached.
    Resource,
    /// The engine does not accept this instance (e.g. too many inputs).
    Ineligible,
    /// A conflict budget ran out.
    Limit,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownReason::Timeout => "timeout",
            UnknownReason::Cancelled => "cancelled",
            UnknownReason::Resource => "resource",
            UnknownReason::Ineligible => "ineligible",
            UnknownReason::Limit => "limit",
        })
    }
}

/// Outcome of checking that a single-output graph is constant zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Equivalent,
    /// PI assignment driving the output to 1.
    Counterexample(Vec<bool>),
    Unknown(UnknownReason),
}

impl CheckResult {
    pub fn is_definitive(&self) -> bool {
        !matches!(self, CheckResult::Unknown(_))
    }
}

/// Whether `witness` drives the single output of `xag` to 1.
pub fn verify_witness(xag: &Xag, witness: &[bool]) -> bool {
    witness.len() == xag.num_pis() && xag.eval_output(witness)
}

/// Cooperative cancellation flag. A child token also observes every
/// ancestor's flag.
#[derive(Clone, Debug, Default)]
pub struct CancelToken {
    flag: Arc<AtomicBool>,
    parent: Option<Arc<CancelToken>>,
}

impl CancelToken {
    pub fn new() -> CancelToken {
        CancelToken::default()
    }

    pub fn child(&self) -> CancelToken {
        CancelToken {
            flag: Arc::new(AtomicBool::new(false)),
            parent: Some(Arc::new(self.clone())),
        }
    }

    pub fn cancel(&self) {
        self.flag.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        if self.flag.load(Ordering::Relaxed) {
            return true;
        }
        match &self.parent {
            Some(p) => p.is_cancelled(),
            None => false,
        }
    }
}

/// Wall-clock deadline plus a cancellation token.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub cancel: CancelToken,
}

impl Budget {
    pub fn unlimited() -> Budget {
        Budget::default()
    }

    pub fn with_timeout(timeout: Duration) -> Budget {
        Budget {
            deadline: Instant::now().checked_add(timeout),
            cancel: CancelToken::new(),
        }
    }

    /// Same deadline, fresh child token.
    pub fn child(&self) -> Budget {
        Budget {
            deadline: self.deadline,
            cancel: self.cancel.child(),
        }
    }

    /// Child budget whose deadline is at most `limit` from now.
    pub fn child_limited(&self, limit: Duration) -> Budget {
        let own = Instant::now().checked_add(limit);
        let deadline = match (self.deadline, own) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Budget {
            deadline,
            cancel: self.cancel.child(),
        }
    }

    pub fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancel.is_cancelled()
    }

    /// Reason to stop now, if any.
    pub fn stop_reason(&self) -> Option<UnknownReason> {
        if self.cancel.is_cancelled() {
            Some(UnknownReason::Cancelled)
        } else if self.timed_out() {
            Some(UnknownReason::Timeout)
        } else {
            None
        }
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.deadline
            .map(|d| d.saturating_duration_since(Instant::now()))
    }
}
