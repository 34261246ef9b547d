// SPDX-License-Identifier: Apache-2.0

//! XOR-AND-inverter graphs with complemented edges.
//!
//! Node 0 is the constant FALSE, nodes `1..=num_pis` are primary inputs and
//! every following node is a two-input gate. Gates only reference earlier
//! nodes, so the gate list is always a topological order.

use std::fmt;
use std::ops::Not;

use rustc_hash::FxHashMap;

use crate::error::XagError;

/// A possibly complemented reference to a node.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    #[inline]
    pub fn new(node: usize, negated: bool) -> Lit {
        Lit(((node as u32) << 1) | negated as u32)
    }

    /// Literal with the AIGER encoding `2 * node + negated`.
    #[inline]
    pub fn from_code(code: u32) -> Lit {
        Lit(code)
    }

    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn is_const(self) -> bool {
        self.0 < 2
    }

    #[inline]
    pub fn positive(self) -> Lit {
        Lit(self.0 & !1)
    }

    #[inline]
    pub fn negate_if(self, cond: bool) -> Lit {
        Lit(self.0 ^ cond as u32)
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "!n{}", self.node())
        } else {
            write!(f, "n{}", self.node())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    And,
    Xor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub in0: Lit,
    pub in1: Lit,
}

impl Gate {
    #[inline]
    pub fn fanins(&self) -> [Lit; 2] {
        [self.in0, self.in1]
    }

    #[inline]
    pub fn apply(&self, a: bool, b: bool) -> bool {
        match self.kind {
            GateKind::And => a & b,
            GateKind::Xor => a ^ b,
        }
    }

    #[inline]
    pub fn apply_word(&self, a: u64, b: u64) -> u64 {
        match self.kind {
            GateKind::And => a & b,
            GateKind::Xor => a ^ b,
        }
    }
}

#[inline]
pub(crate) fn lit_mask(l: Lit) -> u64 {
    0u64.wrapping_sub(l.is_negated() as u64)
}

/// An immutable XOR-AND-inverter graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Xag {
    num_pis: usize,
    gates: Vec<Gate>,
    outputs: Vec<Lit>,
}

impl Xag {
    /// Assembles a graph from raw parts, checking topological validity.
    pub fn from_parts(
        num_pis: usize,
        gates: Vec<Gate>,
        outputs: Vec<Lit>,
    ) -> Result<Xag, XagError> {
        let xag = Xag {
            num_pis,
            gates,
            outputs,
        };
        xag.validate()?;
        Ok(xag)
    }

    /// Linear scan: every fanin strictly precedes its gate, outputs are in range.
    pub fn validate(&self) -> Result<(), XagError> {
        for (i, g) in self.gates.iter().enumerate() {
            let node = self.first_gate() + i;
            for f in g.fanins() {
                if f.node() >= node {
                    return Err(XagError::NotTopological {
                        node,
                        fanin: f.node(),
                    });
                }
            }
        }
        let n = self.num_nodes();
        for o in &self.outputs {
            if o.node() >= n {
                return Err(XagError::NotTopological {
                    node: n,
                    fanin: o.node(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn num_pis(&self) -> usize {
        self.num_pis
    }

    #[inline]
    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        1 + self.num_pis + self.gates.len()
    }

    #[inline]
    pub fn first_gate(&self) -> usize {
        1 + self.num_pis
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Lit] {
        &self.outputs
    }

    /// The single output of a miter-shaped graph.
    pub fn output(&self) -> Lit {
        self.outputs[0]
    }

    #[inline]
    pub fn is_pi(&self, node: usize) -> bool {
        node >= 1 && node <= self.num_pis
    }

    #[inline]
    pub fn is_gate(&self, node: usize) -> bool {
        node > self.num_pis && node < self.num_nodes()
    }

    /// Gate record of a gate node.
    #[inline]
    pub fn gate(&self, node: usize) -> &Gate {
        &self.gates[node - self.first_gate()]
    }

    #[inline]
    pub fn pi(&self, index: usize) -> Lit {
        debug_assert!(index < self.num_pis);
        Lit::new(index + 1, false)
    }

    pub fn gate_nodes(&self) -> std::ops::Range<usize> {
        self.first_gate()..self.num_nodes()
    }

    pub fn num_xors(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::Xor)
            .count()
    }

    pub fn num_ands(&self) -> usize {
        self.gates.len() - self.num_xors()
    }

    /// Number of gate fanin edges leaving every node.
    pub fn fanout_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.num_nodes()];
        for g in &self.gates {
            counts[g.in0.node()] += 1;
            counts[g.in1.node()] += 1;
        }
        counts
    }

    /// Fanout adjacency in compressed form: `(offsets, targets)`.
    pub fn fanouts(&self) -> (Vec<u32>, Vec<u32>) {
        let counts = self.fanout_counts();
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0u32;
        offsets.push(0);
        for c in &counts {
            acc += c;
            offsets.push(acc);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; acc as usize];
        for node in self.gate_nodes() {
            for f in self.gate(node).fanins() {
                let slot = &mut fill[f.node()];
                targets[*slot as usize] = node as u32;
                *slot += 1;
            }
        }
        (offsets, targets)
    }

    /// Per-node values for one input assignment (`inputs[i]` drives PI `i`).
    pub fn eval_nodes(&self, inputs: &[bool]) -> Vec<bool> {
        assert_eq!(inputs.len(), self.num_pis, "input width mismatch");
        let mut val = Vec::with_capacity(self.num_nodes());
        val.push(false);
        val.extend_from_slice(inputs);
        for g in &self.gates {
            let a = val[g.in0.node()] ^ g.in0.is_negated();
            let b = val[g.in1.node()] ^ g.in1.is_negated();
            val.push(g.apply(a, b));
        }
        val
    }

    #[inline]
    pub fn lit_value(values: &[bool], l: Lit) -> bool {
        values[l.node()] ^ l.is_negated()
    }

    pub fn eval(&self, inputs: &[bool]) -> Vec<bool> {
        let val = self.eval_nodes(inputs);
        self.outputs
            .iter()
            .map(|&o| Self::lit_value(&val, o))
            .collect()
    }

    /// Value of the first output.
    pub fn eval_output(&self, inputs: &[bool]) -> bool {
        let val = self.eval_nodes(inputs);
        Self::lit_value(&val, self.outputs[0])
    }

    /// Word-parallel simulation.
    ///
    /// `pi_words` holds `words` words per PI, PI-major. The result holds
    /// `words` words per node, node-major, node 0 included.
    pub fn simulate(&self, pi_words: &[u64], words: usize) -> Vec<u64> {
        assert_eq!(pi_words.len(), self.num_pis * words);
        let mut val = vec![0u64; self.num_nodes() * words];
        val[words..words * (1 + self.num_pis)].copy_from_slice(pi_words);
        for (i, g) in self.gates.iter().enumerate() {
            let node = self.first_gate() + i;
            let (m0, m1) = (lit_mask(g.in0), lit_mask(g.in1));
            let (a0, b0) = (g.in0.node() * words, g.in1.node() * words);
            let (done, rest) = val.split_at_mut(node * words);
            let dst = &mut rest[..words];
            match g.kind {
                GateKind::And => {
                    for w in 0..words {
                        dst[w] = (done[a0 + w] ^ m0) & (done[b0 + w] ^ m1);
                    }
                }
                GateKind::Xor => {
                    for w in 0..words {
                        dst[w] = done[a0 + w] ^ done[b0 + w] ^ m0 ^ m1;
                    }
                }
            }
        }
        val
    }

    /// Nodes in the transitive fan-in of `roots` (roots included).
    pub fn tfi_mask(&self, roots: &[Lit]) -> Vec<bool> {
        let mut mark = vec![false; self.num_nodes()];
        for r in roots {
            mark[r.node()] = true;
        }
        for node in self.gate_nodes().rev() {
            if mark[node] {
                let g = self.gate(node);
                mark[g.in0.node()] = true;
                mark[g.in1.node()] = true;
            }
        }
        mark
    }

    /// Primary inputs (0-based) in the support of `roots`.
    pub fn support(&self, roots: &[Lit]) -> Vec<usize> {
        let mark = self.tfi_mask(roots);
        (0..self.num_pis).filter(|&i| mark[i + 1]).collect()
    }

    /// Replaces the output list, dropping nodes no longer referenced.
    pub fn with_outputs(&self, outputs: Vec<Lit>) -> Xag {
        let mut b = XagBuilder::new(self.num_pis);
        let map = b.import(self);
        let outs = outputs
            .iter()
            .map(|o| map[o.node()].negate_if(o.is_negated()))
            .collect();
        b.build(outs)
    }
}

/// Incremental constructor with constant folding and structural hashing.
///
/// Hash key is the gate kind with ordered fanins; XOR fanins are stored
/// uncomplemented and the polarity moves to the result.
#[derive(Clone, Debug)]
pub struct XagBuilder {
    num_pis: usize,
    gates: Vec<Gate>,
    strash: FxHashMap<Gate, Lit>,
}

impl XagBuilder {
    pub fn new(num_pis: usize) -> XagBuilder {
        XagBuilder {
            num_pis,
            gates: Vec::new(),
            strash: FxHashMap::default(),
        }
    }

    pub fn num_pis(&self) -> usize {
        self.num_pis
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn pi(&self, index: usize) -> Lit {
        assert!(index < self.num_pis);
        Lit::new(index + 1, false)
    }

    fn push(&mut self, gate: Gate) -> Lit {
        if let Some(&l) = self.strash.get(&gate) {
            return l;
        }
        let lit = Lit::new(1 + self.num_pis + self.gates.len(), false);
        self.gates.push(gate);
        self.strash.insert(gate, lit);
        lit
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Lit::FALSE {
            return Lit::FALSE;
        }
        if a == Lit::TRUE {
            return b;
        }
        if a == b {
            return a;
        }
        if a == !b {
            return Lit::FALSE;
        }
        self.push(Gate {
            kind: GateKind::And,
            in0: a,
            in1: b,
        })
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let neg = a.is_negated() ^ b.is_negated();
        let (a, b) = (a.positive(), b.positive());
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == b {
            return Lit::FALSE.negate_if(neg);
        }
        if a == Lit::FALSE {
            return b.negate_if(neg);
        }
        self.push(Gate {
            kind: GateKind::Xor,
            in0: a,
            in1: b,
        })
        .negate_if(neg)
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn gate(&mut self, kind: GateKind, a: Lit, b: Lit) -> Lit {
        match kind {
            GateKind::And => self.and(a, b),
            GateKind::Xor => self.xor(a, b),
        }
    }

    /// `sel ? then : other`
    pub fn mux(&mut self, sel: Lit, then: Lit, other: Lit) -> Lit {
        let t = self.and(sel, then);
        let e = self.and(!sel, other);
        self.or(t, e)
    }

    /// Copies `xag` onto this builder's PIs, returning the image of every node.
    pub fn import(&mut self, xag: &Xag) -> Vec<Lit> {
        assert_eq!(xag.num_pis(), self.num_pis);
        let pis: Vec<Lit> = (0..self.num_pis).map(|i| self.pi(i)).collect();
        self.import_with(xag, &pis)
    }

    /// Copies `xag` with its PIs driven by `pis`.
    pub fn import_with(&mut self, xag: &Xag, pis: &[Lit]) -> Vec<Lit> {
        assert_eq!(pis.len(), xag.num_pis());
        let mut map = Vec::with_capacity(xag.num_nodes());
        map.push(Lit::FALSE);
        map.extend_from_slice(pis);
        for g in xag.gates() {
            let a = map[g.in0.node()].negate_if(g.in0.is_negated());
            let b = map[g.in1.node()].negate_if(g.in1.is_negated());
            let l = self.gate(g.kind, a, b);
            map.push(l);
        }
        map
    }

    /// Finishes the graph, removing gates unreachable from `outputs`.
    pub fn build(self, outputs: Vec<Lit>) -> Xag {
        self.build_with_map(outputs).0
    }

    /// Like [`XagBuilder::build`], also returning where every builder node
    /// ended up (`None` for removed gates).
    pub fn build_with_map(self, outputs: Vec<Lit>) -> (Xag, Vec<Option<Lit>>) {
        let first = 1 + self.num_pis;
        let total = first + self.gates.len();
        let mut live = vec![false; total];
        for o in &outputs {
            live[o.node()] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if live[first + i] {
                let g = &self.gates[i];
                live[g.in0.node()] = true;
                live[g.in1.node()] = true;
            }
        }
        let mut map: Vec<Option<Lit>> = (0..first).map(|n| Some(Lit::new(n, false))).collect();
        let mut gates = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            if live[first + i] {
                let remap = |l: Lit| map[l.node()].unwrap().negate_if(l.is_negated());
                let ng = Gate {
                    kind: g.kind,
                    in0: remap(g.in0),
                    in1: remap(g.in1),
                };
                map.push(Some(Lit::new(first + gates.len(), false)));
                gates.push(ng);
            } else {
                map.push(None);
            }
        }
        let outputs = outputs
            .iter()
            .map(|o| map[o.node()].unwrap().negate_if(o.is_negated()))
            .collect();
        (
            Xag {
                num_pis: self.num_pis,
                gates,
                outputs,
            },
            map,
        )
    }
}

/// Truth table of every output as a bit vector over all `2^num_pis` rows.
///
/// Row `r` assigns PI `i` the value of bit `i` of `r`.
pub fn truth_tables(xag: &Xag) -> Vec<Vec<u64>> {
    let n = xag.num_pis();
    assert!(n <= 24, "truth tables limited to 24 inputs");
    let rows = 1usize << n;
    let words = rows.div_ceil(64);
    let mut pi_words = vec![0u64; n * words];
    for i in 0..n {
        for w in 0..words {
            let mut v = 0u64;
            for bit in 0..64 {
                let row = w * 64 + bit;
                if row < rows && (row >> i) & 1 == 1 {
                    v |= 1 << bit;
                }
            }
            pi_words[i * words + w] = v;
        }
    }
    let sim = xag.simulate(&pi_words, words);
    let tail = if rows.is_multiple_of(64) {
        !0u64
    } else {
        (1u64 << (rows % 64)) - 1
    };
    xag.outputs()
        .iter()
        .map(|o| {
            let base = o.node() * words;
            let mut tt: Vec<u64> = sim[base..base + words]
                .iter()
                .map(|w| w ^ lit_mask(*o))
                .collect();
            *tt.last_mut().unwrap() &= tail;
            tt
        })
        .collect()
}
