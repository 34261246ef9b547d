// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use cec_core::{GateKind, Lit, Xag};

/// Node-by-node evaluation of one row, written independently of the
/// library's own evaluators.
pub fn eval_row(x: &Xag, row: u64) -> Vec<bool> {
    let mut v = vec![false; 1 + x.num_pis() + x.num_gates()];
    for i in 0..x.num_pis() {
        v[1 + i] = (row >> i) & 1 == 1;
    }
    let lit = |v: &[bool], l: Lit| v[l.node()] != l.is_negated();
    for (k, g) in x.gates().iter().enumerate() {
        let a = lit(&v, g.in0);
        let b = lit(&v, g.in1);
        v[1 + x.num_pis() + k] = match g.kind {
            GateKind::And => a && b,
            GateKind::Xor => a != b,
        };
    }
    x.outputs().iter().map(|&o| lit(&v, o)).collect()
}

/// Rows (as bit masks over PIs) driving output 0 to 1.
pub fn onset(x: &Xag) -> Vec<u64> {
    assert!(x.num_pis() <= 24);
    (0..1u64 << x.num_pis())
        .filter(|&r| eval_row(x, r)[0])
        .collect()
}

/// `true` iff output 0 is constant zero.
pub fn oracle_zero(x: &Xag) -> bool {
    assert!(x.num_pis() <= 24);
    (0..1u64 << x.num_pis()).all(|r| !eval_row(x, r)[0])
}

/// Full truth table of every output.
pub fn table(x: &Xag) -> Vec<Vec<bool>> {
    (0..1u64 << x.num_pis()).map(|r| eval_row(x, r)).collect()
}

pub fn row_of(w: &[bool]) -> u64 {
    w.iter().enumerate().map(|(i, &b)| (b as u64) << i).sum()
}

pub fn witness_ok(x: &Xag, w: &[bool]) -> bool {
    w.len() == x.num_pis() && eval_row(x, row_of(w))[0]
}
