// SPDX-License-Identifier: Apache-2.0

//! Structural and simulation features of a sub-miter.

use std::collections::VecDeque;

use crate::cnf::tseitin;
use crate::sweep::random_pi_words;
use crate::xag::{GateKind, Xag};

pub const NUM_FEATURES: usize = 32;

/// Feature names in vector order. This order is part of the model-file
/// contract.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "num_PIs",
    "num_gates",
    "num_XOR_gates",
    "num_AND_gates",
    "num_CNF_vars",
    "num_CNF_clauses",
    "num_CNF_lits",
    "min_XOR_block",
    "max_XOR_block",
    "avg_XOR_block",
    "geo_mean_XOR_block",
    "min_XOR_chain",
    "max_XOR_chain",
    "avg_XOR_chain",
    "geo_mean_XOR_chain",
    "max_idis",
    "avg_idis",
    "max_odis",
    "avg_odis",
    "max_sum_dis",
    "min_sum_dis",
    "avg_sum_dis",
    "max_out_degree",
    "avg_out_degree",
    "cost_SAT",
    "cost_ES",
    "min_stability",
    "max_stability",
    "avg_stability",
    "min_entropy",
    "max_entropy",
    "avg_entropy",
];

/// Index of a feature by name.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

pub const COST_CAP: u64 = (1u64 << 63) - 1;

/// Simulation words used for stability and entropy (4096 patterns).
pub const FEATURE_SIM_WORDS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> f64 {
        self.0[feature_index(name).expect("known feature name")]
    }

    pub fn values(&self) -> &[f64; NUM_FEATURES] {
        &self.0
    }
}

#[inline]
fn is_xor(xag: &Xag, node: usize) -> bool {
    xag.is_gate(node) && xag.gate(node).kind == GateKind::Xor
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of XOR gates linked by XOR-to-XOR fanin edges.
/// Each block is sorted; blocks are ordered by their smallest node.
pub fn xor_blocks(xag: &Xag) -> Vec<Vec<usize>> {
    let n = xag.num_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    for node in xag.gate_nodes() {
        if !is_xor(xag, node) {
            continue;
        }
        for f in xag.gate(node).fanins() {
            if is_xor(xag, f.node()) {
                let (a, b) = (find(&mut parent, node), find(&mut parent, f.node()));
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut slot: Vec<usize> = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for node in xag.gate_nodes() {
        if !is_xor(xag, node) {
            continue;
        }
        let r = find(&mut parent, node);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(node);
    }
    blocks
}

/// Decomposes XOR gates into fanin-connected paths by repeatedly peeling
/// the longest path of unconsumed XOR gates. Paths run from the input side
/// towards the output; ties go to the lowest node indices.
pub fn xor_chains(xag: &Xag) -> Vec<Vec<usize>> {
    let n = xag.num_nodes();
    let mut consumed = vec![false; n];
    let mut len = vec![0u32; n];
    let mut prev = vec![usize::MAX; n];
    let mut chains = Vec::new();
    for block in xor_blocks(xag) {
        let mut left = block.len();
        while left > 0 {
            let mut best = usize::MAX;
            for &node in &block {
                if consumed[node] {
                    continue;
                }
                len[node] = 1;
                prev[node] = usize::MAX;
                let g = xag.gate(node);
                let mut fins = [g.in0.node(), g.in1.node()];
                fins.sort_unstable();
                for f in fins {
                    if is_xor(xag, f) && !consumed[f] && len[f] + 1 > len[node] {
                        len[node] = len[f] + 1;
                        prev[node] = f;
                    }
                }
                if best == usize::MAX || len[node] > len[best] {
                    best = node;
                }
            }
            let mut chain = Vec::with_capacity(len[best] as usize);
            let mut cur = best;
            while cur != usize::MAX {
                chain.push(cur);
                consumed[cur] = true;
                cur = prev[cur];
            }
            chain.reverse();
            left -= chain.len();
            chains.push(chain);
        }
    }
    chains
}

pub const UNREACHABLE: u32 = u32::MAX;

/// Shortest distances to any PI (`idis`) and to the output node (`odis`).
/// Nodes that do not reach the output have `odis = UNREACHABLE`.
pub fn distances(xag: &Xag) -> (Vec<u32>, Vec<u32>) {
    let n = xag.num_nodes();
    let mut idis = vec![0u32; n];
    for node in xag.gate_nodes() {
        let g = xag.gate(node);
        idis[node] = 1 + idis[g.in0.node()].min(idis[g.in1.node()]);
    }
    let mut odis = vec![UNREACHABLE; n];
    if let Some(o) = xag.outputs().first() {
        odis[o.node()] = 0;
    }
    for node in xag.gate_nodes().rev() {
        if odis[node] == UNREACHABLE {
            continue;
        }
        let d = odis[node] + 1;
        for f in xag.gate(node).fanins() {
            if d < odis[f.node()] {
                odis[f.node()] = d;
            }
        }
    }
    (idis, odis)
}

/// Breadth-first variant of [`distances`]'s `odis`; used to cross-check.
pub fn odis_bfs(xag: &Xag) -> Vec<u32> {
    let n = xag.num_nodes();
    let mut odis = vec![UNREACHABLE; n];
    let mut q = VecDeque::new();
    if let Some(o) = xag.outputs().first() {
        odis[o.node()] = 0;
        q.push_back(o.node());
    }
    while let Some(v) = q.pop_front() {
        if !xag.is_gate(v) {
            continue;
        }
        for f in xag.gate(v).fanins() {
            if odis[f.node()] == UNREACHABLE {
                odis[f.node()] = odis[v] + 1;
                q.push_back(f.node());
            }
        }
    }
    odis
}

#[inline]
fn pow2_sat(k: usize) -> u64 {
    if k >= 63 {
        COST_CAP
    } else {
        1u64 << k
    }
}

/// `(cost_SAT, cost_ES)`: the sum of `2^|b|` over XOR blocks and `2^PIs`,
/// both saturating at `2^63 - 1`.
pub fn cost_estimates(xag: &Xag) -> (u64, u64) {
    let sat = xor_blocks(xag).iter().fold(0u64, |acc, b| {
        acc.saturating_add(pow2_sat(b.len())).min(COST_CAP)
    });
    (sat, pow2_sat(xag.num_pis()))
}

/// `cost_SAT` from block sizes alone.
pub fn cost_sat_from_blocks(sizes: &[usize]) -> u64 {
    sizes.iter().fold(0u64, |acc, &s| {
        acc.saturating_add(pow2_sat(s)).min(COST_CAP)
    })
}

fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    (term(p) + term(1.0 - p)).clamp(0.0, 1.0)
}

/// Per-node `(stability, entropy)` from `64 * words` random patterns.
pub fn stability_entropy(xag: &Xag, words: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    assert!(words >= 1);
    let pis = random_pi_words(xag.num_pis(), words, seed);
    let sim = xag.simulate(&pis, words);
    let total = (64 * words) as f64;
    let mut stab = Vec::with_capacity(xag.num_nodes());
    let mut ent = Vec::with_capacity(xag.num_nodes());
    for node in 0..xag.num_nodes() {
        let ones: u32 = sim[node * words..(node + 1) * words]
            .iter()
            .map(|w| w.count_ones())
            .sum();
        let p = ones as f64 / total;
        stab.push(p.max(1.0 - p));
        ent.push(binary_entropy(p));
    }
    (stab, ent)
}

#[derive(Default)]
struct Agg {
    n: usize,
    min: f64,
    max: f64,
    sum: f64,
    log_sum: f64,
}

impl Agg {
    fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.n += 1;
        self.sum += x;
        self.log_sum += x.ln();
    }

    fn min(&self) -> f64 {
        self.min
    }

    fn max(&self) -> f64 {
        self.max
    }

    fn avg(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    fn geo(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.log_sum / self.n as f64).exp()
        }
    }
}

/// All 32 features of a single-output graph.
///
/// Gate-level aggregates are taken over gates only; a gate-free graph uses
/// its output node instead.
pub fn extract_features(xag: &Xag, seed: u64) -> FeatureVector {
    extract_features_with(xag, FEATURE_SIM_WORDS, seed)
}

pub fn extract_features_with(xag: &Xag, words: usize, seed: u64) -> FeatureVector {
    let mut f = [0f64; NUM_FEATURES];
    f[0] = xag.num_pis() as f64;
    f[1] = xag.num_gates() as f64;
    f[2] = xag.num_xors() as f64;
    f[3] = xag.num_ands() as f64;
    let cnf = tseitin(xag, true);
    f[4] = cnf.num_vars as f64;
    f[5] = cnf.clauses.len() as f64;
    f[6] = cnf.num_lits() as f64;

    let blocks = xor_blocks(xag);
    let mut agg = Agg::default();
    for b in &blocks {
        agg.push(b.len() as f64);
    }
    f[7] = agg.min();
    f[8] = agg.max();
    f[9] = agg.avg();
    f[10] = agg.geo();
    let mut agg = Agg::default();
    for c in xor_chains(xag) {
        agg.push(c.len() as f64);
    }
    f[11] = agg.min();
    f[12] = agg.max();
    f[13] = agg.avg();
    f[14] = agg.geo();

    let nodes: Vec<usize> = if xag.num_gates() > 0 {
        xag.gate_nodes().collect()
    } else {
        vec![xag.output().node()]
    };
    let (idis, odis) = distances(xag);
    let (mut ai, mut ao, mut asum) = (Agg::default(), Agg::default(), Agg::default());
    for &v in &nodes {
        ai.push(idis[v] as f64);
        if odis[v] != UNREACHABLE {
            ao.push(odis[v] as f64);
            asum.push((idis[v] + odis[v]) as f64);
        }
    }
    f[15] = ai.max();
    f[16] = ai.avg();
    f[17] = ao.max();
    f[18] = ao.avg();
    f[19] = asum.max();
    f[20] = asum.min();
    f[21] = asum.avg();

    let fo = xag.fanout_counts();
    let mut ad = Agg::default();
    for &v in &nodes {
        ad.push(fo[v] as f64);
    }
    f[22] = ad.max();
    f[23] = ad.avg();

    let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
    f[24] = cost_sat_from_blocks(&sizes) as f64;
    f[25] = pow2_sat(xag.num_pis()) as f64;

    let (stab, ent) = stability_entropy(xag, words, seed);
    let (mut s, mut e) = (Agg::default(), Agg::default());
    for &v in &nodes {
        s.push(stab[v]);
        e.push(ent[v]);
    }
    f[26] = s.min();
    f[27] = s.max();
    f[28] = s.avg();
    f[29] = e.min();
    f[30] = e.max();
    f[31] = e.avg();
    FeatureVector(f)
}
