// SPDX-License-Identifier: Apache-2.0

//! Miter construction.

use crate::error::XagError;
use crate::xag::{Lit, Xag, XagBuilder};

/// OR over `lits` as a balanced tree of complemented ANDs.
pub fn or_tree(b: &mut XagBuilder, lits: &[Lit]) -> Lit {
    match lits.len() {
        0 => Lit::FALSE,
        1 => lits[0],
        n => {
            let (l, r) = lits.split_at(n / 2);
            let l = or_tree(b, l);
            let r = or_tree(b, r);
            b.or(l, r)
        }
    }
}

/// Single-output miter: OR over the XORs of corresponding outputs.
///
/// Both copies share PIs and one hash table, so identical logic collapses.
pub fn build_miter(a: &Xag, b: &Xag) -> Result<Xag, XagError> {
    let all: Vec<usize> = (0..a.outputs().len()).collect();
    build_miter_outputs(a, b, &all)
}

/// Miter restricted to the listed output positions.
pub fn build_miter_outputs(a: &Xag, b: &Xag, outputs: &[usize]) -> Result<Xag, XagError> {
    if a.num_pis() != b.num_pis() || a.outputs().len() != b.outputs().len() {
        return Err(XagError::InterfaceMismatch {
            a_pis: a.num_pis(),
            a_pos: a.outputs().len(),
            b_pis: b.num_pis(),
            b_pos: b.outputs().len(),
        });
    }
    let mut bld = XagBuilder::new(a.num_pis());
    let ma = bld.import(a);
    let mb = bld.import(b);
    let diffs: Vec<Lit> = outputs
        .iter()
        .map(|&k| {
            let (oa, ob) = (a.outputs()[k], b.outputs()[k]);
            let la = ma[oa.node()].negate_if(oa.is_negated());
            let lb = mb[ob.node()].negate_if(ob.is_negated());
            bld.xor(la, lb)
        })
        .collect();
    let out = or_tree(&mut bld, &diffs);
    Ok(bld.build(vec![out]))
}
