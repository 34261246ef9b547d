// SPDX-License-Identifier: Apache-2.0

//! Benchmark rows and penalized average runtime.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub name: String,
    /// `EQ`, `NEQ` or `UNKNOWN`.
    pub verdict: String,
    pub seconds: f64,
}

impl BenchRow {
    pub fn solved(&self) -> bool {
        self.verdict == "EQ" || self.verdict == "NEQ"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub cutoff: f64,
    pub par2: f64,
    pub solved: usize,
}

/// Mean runtime with every unsolved instance charged twice the cutoff.
/// `None` marks an unsolved instance.
pub fn par2(times: &[Option<f64>], cutoff: f64) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    let total: f64 = times.iter().map(|t| t.unwrap_or(2.0 * cutoff)).sum();
    total / times.len() as f64
}

impl BenchReport {
    pub fn new(rows: Vec<BenchRow>, cutoff: f64) -> BenchReport {
        let times: Vec<Option<f64>> = rows
            .iter()
            .map(|r| r.solved().then_some(r.seconds))
            .collect();
        BenchReport {
            par2: par2(&times, cutoff),
            solved: times.iter().filter(|t| t.is_some()).count(),
            rows,
            cutoff,
        }
    }
}
