// SPDX-License-Identifier: Apache-2.0

//! AIG to XAG conversion by matching the three-AND XOR pattern.

use crate::xag::{Gate, GateKind, Lit, Xag, XagBuilder};

/// If `g` is `AND(!x, !y)` with `x = AND(p, q)` and `y = AND(!p, !q)`,
/// returns `(p, q)`: then `g = p ^ q`.
fn match_xor(xag: &Xag, g: &Gate) -> Option<(Lit, Lit)> {
    if g.kind != GateKind::And || !g.in0.is_negated() || !g.in1.is_negated() {
        return None;
    }
    let (xn, yn) = (g.in0.node(), g.in1.node());
    if !xag.is_gate(xn) || !xag.is_gate(yn) || xn == yn {
        return None;
    }
    let (x, y) = (xag.gate(xn), xag.gate(yn));
    if x.kind != GateKind::And || y.kind != GateKind::And {
        return None;
    }
    let (p, q) = (x.in0, x.in1);
    if p.node() == q.node() {
        return None;
    }
    let matches = (y.in0 == !p && y.in1 == !q) || (y.in0 == !q && y.in1 == !p);
    matches.then_some((p, q))
}

/// Rewrites every XOR-shaped AND triple into a single XOR gate.
///
/// Interior ANDs that lose all their fanouts are dropped; the function of
/// every output is unchanged.
pub fn detect_xors(xag: &Xag) -> Xag {
    let mut b = XagBuilder::new(xag.num_pis());
    let mut map: Vec<Lit> = Vec::with_capacity(xag.num_nodes());
    map.push(Lit::FALSE);
    for i in 0..xag.num_pis() {
        map.push(b.pi(i));
    }
    let m = |map: &[Lit], l: Lit| map[l.node()].negate_if(l.is_negated());
    for node in xag.gate_nodes() {
        let g = xag.gate(node);
        let lit = match match_xor(xag, g) {
            Some((p, q)) => {
                let (p, q) = (m(&map, p), m(&map, q));
                b.xor(p, q)
            }
            None => {
                let (a, c) = (m(&map, g.in0), m(&map, g.in1));
                b.gate(g.kind, a, c)
            }
        };
        map.push(lit);
    }
    let outs = xag.outputs().iter().map(|&o| m(&map, o)).collect();
    b.build(outs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xag::truth_tables;

    fn xor_pattern() -> Xag {
        // n3 = a & !b, n4 = !a & b, n5 = !n3 & !n4, out = !n5
        let a = Lit::new(1, false);
        let b = Lit::new(2, false);
        let gates = vec![
            Gate {
                kind: GateKind::And,
                in0: a,
                in1: !b,
            },
            Gate {
                kind: GateKind::And,
                in0: !a,
                in1: b,
            },
            Gate {
                kind: GateKind::And,
                in0: Lit::new(3, true),
                in1: Lit::new(4, true),
            },
        ];
        Xag::from_parts(2, gates, vec![Lit::new(5, true)]).unwrap()
    }

    #[test]
    fn three_and_pattern_becomes_one_xor() {
        let x = xor_pattern();
        let y = detect_xors(&x);
        assert_eq!(y.num_gates(), 1);
        assert_eq!(y.num_xors(), 1);
        assert_eq!(truth_tables(&x), truth_tables(&y));
    }

    #[test]
    fn plain_and_unchanged() {
        let g = Gate {
            kind: GateKind::And,
            in0: Lit::new(1, false),
            in1: Lit::new(2, false),
        };
        let x = Xag::from_parts(2, vec![g], vec![Lit::new(3, false)]).unwrap();
        assert_eq!(detect_xors(&x), x);
    }

    #[test]
    fn shared_interior_and_is_kept() {
        let mut x = xor_pattern();
        // Also expose n3 as an output.
        x = Xag::from_parts(
            2,
            x.gates().to_vec(),
            vec![Lit::new(5, true), Lit::new(3, false)],
        )
        .unwrap();
        let y = detect_xors(&x);
        assert_eq!(y.num_xors(), 1);
        assert_eq!(y.num_ands(), 1);
        assert_eq!(truth_tables(&x), truth_tables(&y));
    }
}
