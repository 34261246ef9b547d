// SPDX-License-Identifier: Apache-2.0

//! Cubes over XAG nodes and constant propagation under a cube.

use crate::error::XagError;
use crate::xag::{GateKind, Lit, Xag, XagBuilder};

/// Conjunction of node literals; a literal `l` asserts that node `l.node()`
/// takes the value `!l.is_negated()`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cube {
    lits: Vec<Lit>,
}

impl Cube {
    pub fn new() -> Cube {
        Cube::default()
    }

    /// Builds a cube, rejecting a node assigned both polarities.
    /// Repeated literals of the same polarity are collapsed.
    pub fn from_lits(lits: impl IntoIterator<Item = Lit>) -> Result<Cube, XagError> {
        let mut c = Cube::new();
        for l in lits {
            c.push(l)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, lit: Lit) -> Result<(), XagError> {
        match self.lits.iter().find(|l| l.node() == lit.node()) {
            Some(&l) if l == lit => Ok(()),
            Some(_) => Err(XagError::ContradictoryCube(lit.node())),
            None => {
                self.lits.push(lit);
                Ok(())
            }
        }
    }

    /// This cube extended with one more literal.
    pub fn with(&self, lit: Lit) -> Result<Cube, XagError> {
        let mut c = self.clone();
        c.push(lit)?;
        Ok(c)
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn assigns(&self, node: usize) -> bool {
        self.lits.iter().any(|l| l.node() == node)
    }
}

/// Result of [`propagate_constants`].
#[derive(Clone, Debug)]
pub struct Propagated {
    pub xag: Xag,
    /// Image of every original node in `xag`: a constant for assigned or
    /// folded nodes, `None` when the node no longer exists. PIs keep their
    /// indices.
    pub node_map: Vec<Option<Lit>>,
    /// The cube is unsatisfiable together with the circuit structure.
    pub infeasible: bool,
}

/// Simplifies `xag` under `cube`.
///
/// Assigned PIs are substituted (cofactor). An assigned gate is replaced by
/// its constant in all fanouts and its defining function is kept as a side
/// condition that is ANDed into every output, so each output of the result
/// equals `output AND cube` on the inputs left free. AND gates asserted true
/// also force their fanins before simplification.
pub fn propagate_constants(xag: &Xag, cube: &Cube) -> Result<Propagated, XagError> {
    let n = xag.num_nodes();
    let mut value: Vec<Option<bool>> = vec![None; n];
    value[0] = Some(false);
    let mut infeasible = false;
    let mut work: Vec<usize> = Vec::new();
    for &l in cube.lits() {
        let node = l.node();
        if node >= n {
            return Err(XagError::CubeOutOfRange(node));
        }
        let v = !l.is_negated();
        match value[node] {
            Some(prev) if prev != v => {
                if node == 0 {
                    infeasible = true;
                } else {
                    return Err(XagError::ContradictoryCube(node));
                }
            }
            Some(_) => {}
            None => {
                value[node] = Some(v);
                work.push(node);
            }
        }
    }
    // Backward implications through AND gates asserted true.
    let mut constrained = value.clone();
    while let Some(node) = work.pop() {
        if !xag.is_gate(node) {
            continue;
        }
        let g = xag.gate(node);
        if g.kind != GateKind::And || constrained[node] != Some(true) {
            continue;
        }
        for f in g.fanins() {
            let fv = !f.is_negated();
            match constrained[f.node()] {
                Some(prev) if prev != fv => infeasible = true,
                Some(_) => {}
                None => {
                    constrained[f.node()] = Some(fv);
                    work.push(f.node());
                }
            }
        }
    }
    if infeasible {
        let b = XagBuilder::new(xag.num_pis());
        let outs = vec![Lit::FALSE; xag.outputs().len()];
        return Ok(Propagated {
            xag: b.build(outs),
            node_map: vec![Some(Lit::FALSE); n],
            infeasible: true,
        });
    }

    let mut b = XagBuilder::new(xag.num_pis());
    let mut map: Vec<Lit> = Vec::with_capacity(n);
    let mut side: Vec<Lit> = Vec::new();
    map.push(Lit::FALSE);
    for i in 0..xag.num_pis() {
        let node = i + 1;
        map.push(match constrained[node] {
            Some(v) => Lit::FALSE.negate_if(v),
            None => b.pi(i),
        });
    }
    for node in xag.gate_nodes() {
        let g = xag.gate(node);
        let a = map[g.in0.node()].negate_if(g.in0.is_negated());
        let c = map[g.in1.node()].negate_if(g.in1.is_negated());
        let f = b.gate(g.kind, a, c);
        match constrained[node] {
            Some(v) => {
                // f must evaluate to v
                let cond = f.negate_if(!v);
                if cond == Lit::FALSE {
                    infeasible = true;
                } else if cond != Lit::TRUE {
                    side.push(cond);
                }
                map.push(Lit::FALSE.negate_if(v));
            }
            None => map.push(f),
        }
    }
    let mut guard = Lit::TRUE;
    if infeasible {
        guard = Lit::FALSE;
    } else {
        for s in side {
            guard = b.and(guard, s);
        }
    }
    let outs: Vec<Lit> = xag
        .outputs()
        .iter()
        .map(|o| {
            let l = map[o.node()].negate_if(o.is_negated());
            b.and(l, guard)
        })
        .collect();
    let (out, remap) = b.build_with_map(outs);
    let node_map = map
        .iter()
        .map(|l| remap[l.node()].map(|r| r.negate_if(l.is_negated())))
        .collect();
    Ok(Propagated {
        xag: out,
        node_map,
        infeasible,
    })
}
