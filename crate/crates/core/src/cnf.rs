// SPDX-License-Identifier: Apache-2.0

//! Tseitin encoding of single-output graphs.

use crate::xag::{GateKind, Lit, Xag};

/// CNF with DIMACS-style signed literals (variables start at 1).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn num_lits(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    /// Whether `model` (indexed by variable, entry 0 unused) satisfies every clause.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = model[l.unsigned_abs() as usize];
                if l > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }
}

/// CNF variable of graph node `node` for nodes other than the constant.
/// PI `i` is variable `i + 1`.
#[inline]
pub fn node_var(node: usize) -> usize {
    debug_assert!(node > 0);
    node
}

/// Tseitin encoding: one variable per PI and per gate, 3 clauses per AND,
/// 4 per XOR. With `assert_output_true` the output literal is added as a
/// unit clause, so the formula is satisfiable iff some input drives the
/// output to 1. A reference to the constant node gets one extra variable
/// pinned false.
pub fn tseitin(xag: &Xag, assert_output_true: bool) -> CnfFormula {
    let mut num_vars = xag.num_nodes() - 1;
    let mut clauses: Vec<Vec<i32>> =
        Vec::with_capacity(xag.num_xors() * 4 + xag.num_ands() * 3 + 2);
    let mut const_var: Option<i32> = None;
    let mut enc = |l: Lit, num_vars: &mut usize, clauses: &mut Vec<Vec<i32>>| -> i32 {
        let v = if l.node() == 0 {
            *const_var.get_or_insert_with(|| {
                *num_vars += 1;
                let c = *num_vars as i32;
                clauses.push(vec![-c]);
                c
            })
        } else {
            node_var(l.node()) as i32
        };
        if l.is_negated() {
            -v
        } else {
            v
        }
    };
    for node in xag.gate_nodes() {
        let g = xag.gate(node);
        let o = node_var(node) as i32;
        let a = enc(g.in0, &mut num_vars, &mut clauses);
        let b = enc(g.in1, &mut num_vars, &mut clauses);
        match g.kind {
            GateKind::And => {
                clauses.push(vec![-o, a]);
                clauses.push(vec![-o, b]);
                clauses.push(vec![o, -a, -b]);
            }
            GateKind::Xor => {
                clauses.push(vec![-o, a, b]);
                clauses.push(vec![-o, -a, -b]);
                clauses.push(vec![o, -a, b]);
                clauses.push(vec![o, a, -b]);
            }
        }
    }
    if assert_output_true {
        let out = enc(xag.output(), &mut num_vars, &mut clauses);
        clauses.push(vec![out]);
    }
    CnfFormula { num_vars, clauses }
}

/// PI values of a model of a formula produced by [`tseitin`].
pub fn model_inputs(xag: &Xag, model: &[bool]) -> Vec<bool> {
    (0..xag.num_pis()).map(|i| model[node_var(i + 1)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xag::XagBuilder;

    fn one_gate(kind: GateKind) -> Xag {
        let mut b = XagBuilder::new(2);
        let o = b.gate(kind, b.pi(0), b.pi(1));
        b.build(vec![o])
    }

    #[test]
    fn and_counts() {
        let f = tseitin(&one_gate(GateKind::And), true);
        assert_eq!(f.num_vars, 3);
        assert_eq!(f.clauses.len(), 4);
        assert_eq!(f.num_lits(), 2 + 2 + 3 + 1);
    }

    #[test]
    fn xor_counts() {
        let f = tseitin(&one_gate(GateKind::Xor), true);
        assert_eq!(f.num_vars, 3);
        assert_eq!(f.clauses.len(), 5);
    }

    #[test]
    fn constant_false_output_is_contradictory() {
        let b = XagBuilder::new(2);
        let x = b.build(vec![Lit::FALSE]);
        let f = tseitin(&x, true);
        assert_eq!(f.num_vars, 3);
        assert!(f.clauses.iter().all(|c| !c.is_empty()));
        for bits in 0..8u32 {
            let model: Vec<bool> = (0..4)
                .map(|v| v > 0 && (bits >> (v - 1)) & 1 == 1)
                .collect();
            assert!(!f.is_satisfied_by(&model));
        }
    }

    #[test]
    fn satisfying_model_matches_evaluation() {
        let x = one_gate(GateKind::And);
        let f = tseitin(&x, true);
        assert!(f.is_satisfied_by(&[false, true, true, true]));
        assert!(!f.is_satisfied_by(&[false, true, false, false]));
    }
}
