// SPDX-License-Identifier: Apache-2.0

//! Reduced ordered BDDs with complement edges.
//!
//! There is one terminal (node 0, TRUE); FALSE is its complement. The high
//! edge of a stored node is never complemented, which keeps the
//! representation canonical. Garbage collection is mark and sweep at safe
//! points between gate compilations.

use std::time::Duration;

use rustc_hash::FxHashMap;

use crate::check::{verify_witness, Budget, CheckResult, UnknownReason};
use crate::xag::{GateKind, Xag};

/// A possibly complemented node reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(u32);

impl Edge {
    pub const TRUE: Edge = Edge(0);
    pub const FALSE: Edge = Edge(1);

    #[inline]
    fn new(index: u32, neg: bool) -> Edge {
        Edge((index << 1) | neg as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn is_const(self) -> bool {
        self.0 < 2
    }

    #[inline]
    fn regular(self) -> Edge {
        Edge(self.0 & !1)
    }

    #[inline]
    pub fn negate_if(self, c: bool) -> Edge {
        Edge(self.0 ^ c as u32)
    }
}

impl std::ops::Not for Edge {
    type Output = Edge;

    #[inline]
    fn not(self) -> Edge {
        Edge(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BddNode {
    /// Level in the variable order; `u32::MAX` for the terminal.
    pub var: u32,
    pub low: Edge,
    pub high: Edge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BddLimits {
    /// Live nodes allowed, both terminals counted.
    pub max_nodes: usize,
    pub max_cache: usize,
}

impl Default for BddLimits {
    fn default() -> Self {
        BddLimits {
            max_nodes: 1 << 24,
            max_cache: 1 << 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
/// Why an operation stopped early.
pub enum Abort {
    Nodes,
    Time(UnknownReason),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CacheOp {
    And = 1,
    Xor = 2,
}

#[derive(Clone, Copy, Default)]
struct CacheEntry {
    op: u32,
    a: u32,
    b: u32,
    r: u32,
}

const TERMINAL_VAR: u32 = u32::MAX;
const FREE_VAR: u32 = u32::MAX - 1;

pub struct BddManager {
    nodes: Vec<BddNode>,
    free: Vec<u32>,
    unique: FxHashMap<(u32, Edge, Edge), u32>,
    cache: Vec<CacheEntry>,
    limits: BddLimits,
    budget: Budget,
    ticks: u32,
    peak_live: usize,
}

impl BddManager {
    pub fn new(limits: BddLimits, budget: Budget) -> BddManager {
        BddManager {
            nodes: vec![BddNode {
                var: TERMINAL_VAR,
                low: Edge::TRUE,
                high: Edge::TRUE,
            }],
            free: Vec::new(),
            unique: FxHashMap::default(),
            cache: vec![CacheEntry::default(); 1 << 12.min(limits.max_cache.max(1).ilog2())],
            limits,
            budget,
            ticks: 0,
            peak_live: 2,
        }
    }

    /// Live nodes with both terminals counted.
    pub fn live_nodes(&self) -> usize {
        self.unique.len() + 2
    }

    pub fn peak_live_nodes(&self) -> usize {
        self.peak_live
    }

    pub fn node(&self, e: Edge) -> BddNode {
        self.nodes[e.index()]
    }

    #[inline]
    fn level(&self, e: Edge) -> u32 {
        self.nodes[e.index()].var
    }

    /// Cofactors of `e` with respect to level `v`.
    #[inline]
    fn cofactors(&self, e: Edge, v: u32) -> (Edge, Edge) {
        let n = self.nodes[e.index()];
        if n.var != v {
            return (e, e);
        }
        let c = e.is_complemented();
        (n.low.negate_if(c), n.high.negate_if(c))
    }

    fn mk(&mut self, var: u32, low: Edge, high: Edge) -> Result<Edge, Abort> {
        if low == high {
            return Ok(low);
        }
        let neg = high.is_complemented();
        let (low, high) = (low.negate_if(neg), high.negate_if(neg));
        if let Some(&i) = self.unique.get(&(var, low, high)) {
            return Ok(Edge::new(i, neg));
        }
        if self.live_nodes() >= self.limits.max_nodes {
            return Err(Abort::Nodes);
        }
        self.ticks += 1;
        if self.ticks & 0xfff == 0 {
            if let Some(why) = self.budget.stop_reason() {
                return Err(Abort::Time(why));
            }
        }
        let node = BddNode { var, low, high };
        let i = match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        self.unique.insert((var, low, high), i);
        self.peak_live = self.peak_live.max(self.live_nodes());
        if self.live_nodes() > self.cache.len() && self.cache.len() < self.limits.max_cache {
            let n = (self.cache.len() * 2).min(self.limits.max_cache.next_power_of_two());
            self.cache = vec![CacheEntry::default(); n];
        }
        Ok(Edge::new(i, neg))
    }

    /// The projection function of level `level`.
    pub fn var(&mut self, level: usize) -> Result<Edge, Abort> {
        self.mk(level as u32, Edge::FALSE, Edge::TRUE)
    }

    #[inline]
    fn cache_slot(&self, op: CacheOp, a: Edge, b: Edge) -> usize {
        let h = (a.0 as u64)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((b.0 as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
            .wrapping_add(op as u64);
        (h >> 20) as usize & (self.cache.len() - 1)
    }

    fn cache_get(&self, op: CacheOp, a: Edge, b: Edge) -> Option<Edge> {
        let e = self.cache[self.cache_slot(op, a, b)];
        (e.op == op as u32 && e.a == a.0 && e.b == b.0).then_some(Edge(e.r))
    }

    fn cache_put(&mut self, op: CacheOp, a: Edge, b: Edge, r: Edge) {
        let s = self.cache_slot(op, a, b);
        self.cache[s] = CacheEntry {
            op: op as u32,
            a: a.0,
            b: b.0,
            r: r.0,
        };
    }

    pub fn and(&mut self, f: Edge, g: Edge) -> Result<Edge, Abort> {
        if f == Edge::FALSE || g == Edge::FALSE || f == !g {
            return Ok(Edge::FALSE);
        }
        if f == Edge::TRUE || f == g {
            return Ok(g);
        }
        if g == Edge::TRUE {
            return Ok(f);
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        if let Some(r) = self.cache_get(CacheOp::And, f, g) {
            return Ok(r);
        }
        let v = self.level(f).min(self.level(g));
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let lo = self.and(f0, g0)?;
        let hi = self.and(f1, g1)?;
        let r = self.mk(v, lo, hi)?;
        self.cache_put(CacheOp::And, f, g, r);
        Ok(r)
    }

    pub fn xor(&mut self, f: Edge, g: Edge) -> Result<Edge, Abort> {
        let neg = f.is_complemented() ^ g.is_complemented();
        let (f, g) = (f.regular(), g.regular());
        if f == g {
            return Ok(Edge::FALSE.negate_if(neg));
        }
        if f == Edge::TRUE {
            return Ok((!g).negate_if(neg));
        }
        if g == Edge::TRUE {
            return Ok((!f).negate_if(neg));
        }
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        if let Some(r) = self.cache_get(CacheOp::Xor, f, g) {
            return Ok(r.negate_if(neg));
        }
        let v = self.level(f).min(self.level(g));
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let lo = self.xor(f0, g0)?;
        let hi = self.xor(f1, g1)?;
        let r = self.mk(v, lo, hi)?;
        self.cache_put(CacheOp::Xor, f, g, r);
        Ok(r.negate_if(neg))
    }

    /// Frees every node not reachable from `roots` and clears the cache.
    pub fn collect_garbage(&mut self, roots: &[Edge]) {
        let mut mark = vec![false; self.nodes.len()];
        mark[0] = true;
        let mut stack: Vec<usize> = roots.iter().map(|e| e.index()).collect();
        while let Some(i) = stack.pop() {
            if mark[i] {
                continue;
            }
            mark[i] = true;
            let n = self.nodes[i];
            stack.push(n.low.index());
            stack.push(n.high.index());
        }
        for (i, m) in mark.iter().enumerate().skip(1) {
            if !m && self.nodes[i].var != FREE_VAR {
                let n = self.nodes[i];
                self.unique.remove(&(n.var, n.low, n.high));
                self.nodes[i].var = FREE_VAR;
                self.free.push(i as u32);
            }
        }
        self.cache.fill(CacheEntry::default());
    }

    /// Satisfying assignment over `num_levels` levels (don't cares are 0),
    /// or `None` for FALSE.
    pub fn sat_path(&self, mut e: Edge, num_levels: usize) -> Option<Vec<bool>> {
        if e == Edge::FALSE {
            return None;
        }
        let mut val = vec![false; num_levels];
        while !e.is_const() {
            let n = self.nodes[e.index()];
            let c = e.is_complemented();
            let (lo, hi) = (n.low.negate_if(c), n.high.negate_if(c));
            if lo != Edge::FALSE {
                e = lo;
            } else {
                val[n.var as usize] = true;
                e = hi;
            }
        }
        debug_assert_eq!(e, Edge::TRUE);
        Some(val)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BddOutcome {
    Zero,
    /// PI assignment driving the output to 1.
    NonZero(Vec<bool>),
    Limit(UnknownReason),
}

/// Compiles every node of `xag` (all outputs kept alive). `order[level]`
/// names the PI at each level. Returns the manager and the edge of every
/// node, or the reason compilation stopped.
pub fn compile_nodes(
    xag: &Xag,
    order: &[usize],
    limits: BddLimits,
    budget: &Budget,
) -> Result<(BddManager, Vec<Edge>), UnknownReason> {
    assert_eq!(order.len(), xag.num_pis());
    let mut level_of = vec![0usize; xag.num_pis()];
    for (lvl, &pi) in order.iter().enumerate() {
        level_of[pi] = lvl;
    }
    let mut m = BddManager::new(limits, budget.child());
    let mut edge = vec![Edge::FALSE; xag.num_nodes()];
    let lim = |a: Abort| match a {
        Abort::Nodes => UnknownReason::Resource,
        Abort::Time(w) => w,
    };
    // Values still needed by a later gate or an output.
    let mut pending = xag.fanout_counts();
    for o in xag.outputs() {
        pending[o.node()] += 1;
    }
    for i in 0..xag.num_pis() {
        if pending[i + 1] > 0 {
            edge[i + 1] = m.var(level_of[i]).map_err(lim)?;
        }
    }
    let gc_roots = |edge: &[Edge], pending: &[u32]| -> Vec<Edge> {
        (1..edge.len())
            .filter(|&n| pending[n] > 0)
            .map(|n| edge[n])
            .collect()
    };
    for node in xag.gate_nodes() {
        let g = *xag.gate(node);
        let a = edge[g.in0.node()].negate_if(g.in0.is_negated());
        let b = edge[g.in1.node()].negate_if(g.in1.is_negated());
        let apply = |m: &mut BddManager| match g.kind {
            GateKind::And => m.and(a, b),
            GateKind::Xor => m.xor(a, b),
        };
        let r = match apply(&mut m) {
            Ok(r) => r,
            Err(Abort::Nodes) => {
                m.collect_garbage(&gc_roots(&edge[..node], &pending));
                apply(&mut m).map_err(lim)?
            }
            Err(e) => return Err(lim(e)),
        };
        edge[node] = r;
        for f in g.fanins() {
            pending[f.node()] -= 1;
        }
        if m.live_nodes() * 4 >= m.limits.max_nodes * 3 {
            m.collect_garbage(&gc_roots(&edge[..=node], &pending));
        }
    }
    Ok((m, edge))
}

/// Compiles the single output of `xag` under `order` (identity when
/// `None`) and decides whether it is the constant FALSE.
pub fn build_bdd(
    xag: &Xag,
    order: Option<&[usize]>,
    limits: BddLimits,
    budget: &Budget,
) -> BddOutcome {
    let identity: Vec<usize> = (0..xag.num_pis()).collect();
    let order = order.unwrap_or(&identity);
    let (m, edge) = match compile_nodes(xag, order, limits, budget) {
        Ok(r) => r,
        Err(why) => return BddOutcome::Limit(why),
    };
    let o = xag.output();
    let root = edge[o.node()].negate_if(o.is_negated());
    match m.sat_path(root, xag.num_pis()) {
        None => BddOutcome::Zero,
        Some(levels) => {
            let mut w = vec![false; xag.num_pis()];
            for (lvl, &pi) in order.iter().enumerate() {
                w[pi] = levels[lvl];
            }
            BddOutcome::NonZero(w)
        }
    }
}

/// BDD check that the output of `xag` is constant zero.
pub fn bdd_check(xag: &Xag, limits: BddLimits, budget: &Budget) -> CheckResult {
    match build_bdd(xag, None, limits, budget) {
        BddOutcome::Zero => CheckResult::Equivalent,
        BddOutcome::NonZero(w) => {
            assert!(verify_witness(xag, &w), "BDD witness does not verify");
            CheckResult::Counterexample(w)
        }
        BddOutcome::Limit(why) => CheckResult::Unknown(why),
    }
}

/// Convenience wrapper with a time limit only.
pub fn bdd_check_for(xag: &Xag, timeout: Duration) -> CheckResult {
    bdd_check(xag, BddLimits::default(), &Budget::with_timeout(timeout))
}
