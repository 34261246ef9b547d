// SPDX-License-Identifier: Apache-2.0

//! Transitive fan-in cones.

use crate::xag::{Lit, Xag, XagBuilder};

/// A sub-graph cut out of a larger graph.
#[derive(Clone, Debug)]
pub struct Cone {
    /// Outputs are the images of the requested roots, in order.
    pub xag: Xag,
    /// Image of every node of the source graph, `None` outside the cone.
    pub node_map: Vec<Option<Lit>>,
    /// `pi_origin[i]` is the source PI (0-based) that drives cone PI `i`.
    pub pi_origin: Vec<usize>,
}

/// Extracts the union of the fan-in cones of `roots`.
///
/// PIs in the support are renumbered densely, keeping their relative order.
pub fn tfi_cone(xag: &Xag, roots: &[Lit]) -> Cone {
    let mask = xag.tfi_mask(roots);
    let pi_origin: Vec<usize> = (0..xag.num_pis()).filter(|&i| mask[i + 1]).collect();
    let mut b = XagBuilder::new(pi_origin.len());
    let mut map: Vec<Option<Lit>> = vec![None; xag.num_nodes()];
    map[0] = Some(Lit::FALSE);
    for (k, &i) in pi_origin.iter().enumerate() {
        map[i + 1] = Some(b.pi(k));
    }
    for node in xag.gate_nodes() {
        if !mask[node] {
            continue;
        }
        let g = xag.gate(node);
        let f = |l: Lit| {
            map[l.node()]
                .expect("fanin inside cone")
                .negate_if(l.is_negated())
        };
        let (a, c) = (f(g.in0), f(g.in1));
        map[node] = Some(b.gate(g.kind, a, c));
    }
    let outs = roots
        .iter()
        .map(|r| {
            map[r.node()]
                .expect("root inside cone")
                .negate_if(r.is_negated())
        })
        .collect();
    let (cone, remap) = b.build_with_map(outs);
    let node_map = map
        .into_iter()
        .map(|m| m.and_then(|l| remap[l.node()].map(|r| r.negate_if(l.is_negated()))))
        .collect();
    Cone {
        xag: cone,
        node_map,
        pi_origin,
    }
}
