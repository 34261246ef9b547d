// SPDX-License-Identifier: Apache-2.0

//! Conflict-driven clause learning solver.
//!
//! Two watched literals with blockers, VSIDS branching, phase saving, 1UIP
//! learning with recursive minimization, LBD-driven restarts and learnt
//! clause reduction. Clauses live in one flat arena.

use crate::check::Budget;

type CRef = u32;
const NO_REASON: CRef = u32::MAX;

// Arena layout per clause: [len, flags, activity bits, lits...]
const HDR: usize = 3;
const F_LEARNT: u32 = 1;
const F_DELETED: u32 = 2;
const LBD_SHIFT: u32 = 2;

#[inline]
fn var(l: u32) -> usize {
    (l >> 1) as usize
}

#[inline]
fn from_dimacs(l: i32) -> u32 {
    let v = l.unsigned_abs() - 1;
    (v << 1) | (l < 0) as u32
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: CRef,
    blocker: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    /// Deadline, cancellation or conflict limit.
    Interrupted,
}

/// Limits for one [`Solver::solve`] call.
#[derive(Clone, Debug, Default)]
pub struct SolveLimits {
    pub budget: Budget,
    pub max_conflicts: Option<u64>,
}

struct VarHeap {
    heap: Vec<u32>,
    index: Vec<u32>,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl VarHeap {
    fn new() -> VarHeap {
        VarHeap {
            heap: Vec::new(),
            index: Vec::new(),
        }
    }

    fn contains(&self, v: usize) -> bool {
        self.index[v] != NOT_IN_HEAP
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.heap[p] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[p];
            self.index[self.heap[i] as usize] = i as u32;
            i = p;
        }
        self.heap[i] = v;
        self.index[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.index[self.heap[i] as usize] = i as u32;
            i = c;
        }
        self.heap[i] = v;
        self.index[v as usize] = i as u32;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.index[v] = self.heap.len() as u32;
        self.heap.push(v as u32);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.index[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.index[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }
}

/// Exponential moving average.
struct Ema {
    value: f64,
    alpha: f64,
}

impl Ema {
    fn update(&mut self, x: f64) {
        self.value += self.alpha * (x - self.value);
    }
}

pub struct Solver {
    num_vars: usize,
    ok: bool,
    arena: Vec<u32>,
    wasted: usize,
    originals: Vec<CRef>,
    learnts: Vec<CRef>,
    watches: Vec<Vec<Watcher>>,
    vals: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<CRef>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<u8>,
    level_stamp: Vec<u64>,
    stamp: u64,
    toclear: Vec<u32>,
    stack: Vec<u32>,
    model: Vec<bool>,
    next_reduce: u64,
    reduce_count: u64,
    lbd_fast: Ema,
    lbd_slow: Ema,
    conflicts_since_restart: u64,
    pub stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            num_vars: 0,
            ok: true,
            arena: Vec::new(),
            wasted: 0,
            originals: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            vals: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            phase: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            level_stamp: vec![0],
            stamp: 0,
            toclear: Vec::new(),
            stack: Vec::new(),
            model: Vec::new(),
            next_reduce: 2000,
            reduce_count: 0,
            lbd_fast: Ema {
                value: 0.0,
                alpha: 1.0 / 32.0,
            },
            lbd_slow: Ema {
                value: 0.0,
                alpha: 1.0 / 4096.0,
            },
            conflicts_since_restart: 0,
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Makes sure variables `1..=n` exist.
    pub fn reserve_vars(&mut self, n: usize) {
        while self.num_vars < n {
            let v = self.num_vars;
            self.num_vars += 1;
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.vals.push(0);
            self.vals.push(0);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.phase.push(false);
            self.activity.push(0.0);
            self.seen.push(0);
            self.heap.index.push(NOT_IN_HEAP);
            self.heap.insert(v, &self.activity);
            self.level_stamp.push(0);
        }
    }

    #[inline]
    fn value(&self, l: u32) -> i8 {
        self.vals[l as usize]
    }

    #[inline]
    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    #[inline]
    fn clause_len(&self, c: CRef) -> usize {
        self.arena[c as usize] as usize
    }

    #[inline]
    fn lit_at(&self, c: CRef, i: usize) -> u32 {
        self.arena[c as usize + HDR + i]
    }

    fn alloc(&mut self, lits: &[u32], learnt: bool, lbd: u32) -> CRef {
        let c = self.arena.len() as CRef;
        self.arena.push(lits.len() as u32);
        self.arena
            .push((learnt as u32 * F_LEARNT) | (lbd << LBD_SHIFT));
        self.arena.push(0f32.to_bits());
        self.arena.extend_from_slice(lits);
        c
    }

    fn attach(&mut self, c: CRef) {
        let (a, b) = (self.lit_at(c, 0), self.lit_at(c, 1));
        self.watches[a as usize].push(Watcher {
            cref: c,
            blocker: b,
        });
        self.watches[b as usize].push(Watcher {
            cref: c,
            blocker: a,
        });
    }

    /// Adds a clause of DIMACS literals. Returns false once the formula is
    /// known to be unsatisfiable.
    pub fn add_clause(&mut self, clause: &[i32]) -> bool {
        if !self.ok {
            return false;
        }
        assert_eq!(self.decision_level(), 0);
        let max = clause
            .iter()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        self.reserve_vars(max);
        let mut lits: Vec<u32> = clause.iter().map(|&l| from_dimacs(l)).collect();
        lits.sort_unstable();
        lits.dedup();
        let mut out = Vec::with_capacity(lits.len());
        for (i, &l) in lits.iter().enumerate() {
            if i + 1 < lits.len() && lits[i + 1] == l ^ 1 {
                return true;
            }
            match self.value(l) {
                1 => return true,
                -1 => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                if self.propagate() != NO_REASON {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                let c = self.alloc(&out, false, 0);
                self.originals.push(c);
                self.attach(c);
                true
            }
        }
    }

    #[inline]
    fn enqueue(&mut self, l: u32, reason: CRef) {
        let v = var(l);
        self.vals[l as usize] = 1;
        self.vals[(l ^ 1) as usize] = -1;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> CRef {
        let mut confl = NO_REASON;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut i = 0;
            let mut j = 0;
            let n = ws.len();
            while i < n {
                let w = ws[i];
                i += 1;
                if self.vals[w.blocker as usize] == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let c = w.cref as usize;
                let base = c + HDR;
                if self.arena[base] == false_lit {
                    self.arena.swap(base, base + 1);
                }
                let first = self.arena[base];
                let nw = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.vals[first as usize] == 1 {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.arena[c] as usize;
                let mut moved = false;
                for k in 2..len {
                    let l = self.arena[base + k];
                    if self.vals[l as usize] != -1 {
                        self.arena[base + 1] = l;
                        self.arena[base + k] = false_lit;
                        self.watches[l as usize].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.vals[first as usize] == -1 {
                    confl = w.cref;
                    self.qhead = self.trail.len();
                    while i < n {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if confl != NO_REASON {
                break;
            }
        }
        confl
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        if self.heap.contains(v) {
            let i = self.heap.index[v] as usize;
            self.heap.up(i, &self.activity);
        }
    }

    fn bump_clause(&mut self, c: CRef) {
        let slot = c as usize + 2;
        let a = f32::from_bits(self.arena[slot]) + self.cla_inc;
        self.arena[slot] = a.to_bits();
        if a > 1e20 {
            for &l in &self.learnts {
                let s = l as usize + 2;
                self.arena[s] = (f32::from_bits(self.arena[s]) * 1e-20).to_bits();
            }
            self.cla_inc *= 1e-20;
        }
    }

    #[inline]
    fn abstract_level(&self, v: usize) -> u32 {
        1 << (self.level[v] & 31)
    }

    fn lit_redundant(&mut self, p: u32, abstract_levels: u32) -> bool {
        self.stack.clear();
        self.stack.push(p);
        let top = self.toclear.len();
        while let Some(q) = self.stack.pop() {
            let c = self.reason[var(q)];
            let len = self.clause_len(c);
            for k in 1..len {
                let l = self.lit_at(c, k);
                let v = var(l);
                if self.seen[v] == 0 && self.level[v] > 0 {
                    if self.reason[v] != NO_REASON
                        && (self.abstract_level(v) & abstract_levels) != 0
                    {
                        self.seen[v] = 1;
                        self.stack.push(l);
                        self.toclear.push(l);
                    } else {
                        for t in top..self.toclear.len() {
                            self.seen[var(self.toclear[t])] = 0;
                        }
                        self.toclear.truncate(top);
                        return false;
                    }
                }
            }
        }
        true
    }

    /// 1UIP conflict analysis: `(learnt clause, backtrack level, lbd)`.
    fn analyze(&mut self, mut confl: CRef) -> (Vec<u32>, usize, u32) {
        let mut learnt: Vec<u32> = vec![0];
        let mut path = 0usize;
        let mut p: Option<u32> = None;
        let mut idx = self.trail.len();
        let cur = self.decision_level() as u32;
        loop {
            if self.arena[confl as usize + 1] & F_LEARNT != 0 {
                self.bump_clause(confl);
            }
            let len = self.clause_len(confl);
            let start = if p.is_some() { 1 } else { 0 };
            for k in start..len {
                let q = self.lit_at(confl, k);
                let v = var(q);
                if self.seen[v] == 0 && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = 1;
                    if self.level[v] >= cur {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] != 0 {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            confl = self.reason[var(lit)];
            self.seen[var(lit)] = 0;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.unwrap() ^ 1;

        self.toclear.clear();
        self.toclear.extend_from_slice(&learnt);
        let mut abstract_levels = 0u32;
        for &l in &learnt[1..] {
            abstract_levels |= self.abstract_level(var(l));
        }
        let mut kept = 1;
        for i in 1..learnt.len() {
            let l = learnt[i];
            if self.reason[var(l)] == NO_REASON || !self.lit_redundant(l, abstract_levels) {
                learnt[kept] = l;
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for k in 0..self.toclear.len() {
            let v = var(self.toclear[k]);
            self.seen[v] = 0;
        }

        let mut bt = 0usize;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[var(learnt[i])] > self.level[var(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[var(learnt[1])] as usize;
        }
        self.stamp += 1;
        let mut lbd = 0u32;
        for &l in &learnt {
            let lv = self.level[var(l)] as usize;
            if self.level_stamp[lv] != self.stamp {
                self.level_stamp[lv] = self.stamp;
                lbd += 1;
            }
        }
        (learnt, bt, lbd)
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = var(l);
            self.vals[l as usize] = 0;
            self.vals[(l ^ 1) as usize] = 0;
            self.reason[v] = NO_REASON;
            self.phase[v] = l & 1 == 0;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<u32> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.vals[2 * v] == 0 {
                return Some(((v as u32) << 1) | (!self.phase[v]) as u32);
            }
        }
        None
    }

    fn locked(&self, c: CRef) -> bool {
        let l = self.lit_at(c, 0);
        self.vals[l as usize] == 1 && self.reason[var(l)] == c
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<(u32, f32, CRef)> = Vec::new();
        for &c in &self.learnts {
            let flags = self.arena[c as usize + 1];
            let lbd = flags >> LBD_SHIFT;
            if lbd <= 2 || self.locked(c) {
                continue;
            }
            cands.push((lbd, f32::from_bits(self.arena[c as usize + 2]), c));
        }
        cands.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
        let remove = cands.len() / 2;
        for &(_, _, c) in &cands[..remove] {
            self.arena[c as usize + 1] |= F_DELETED;
            self.wasted += HDR + self.clause_len(c);
        }
        self.learnts
            .retain(|&c| self.arena[c as usize + 1] & F_DELETED == 0);
        self.collect_garbage();
    }

    /// Compacts the arena and rebuilds every watch list.
    fn collect_garbage(&mut self) {
        let mut arena = Vec::with_capacity(self.arena.len() - self.wasted);
        let relocate = |old: &Vec<u32>, c: CRef, arena: &mut Vec<u32>| -> CRef {
            let n = HDR + old[c as usize] as usize;
            let nc = arena.len() as CRef;
            arena.extend_from_slice(&old[c as usize..c as usize + n]);
            nc
        };
        let mut forward: rustc_hash::FxHashMap<CRef, CRef> = rustc_hash::FxHashMap::default();
        let mut originals = Vec::with_capacity(self.originals.len());
        for &c in &self.originals {
            let nc = relocate(&self.arena, c, &mut arena);
            forward.insert(c, nc);
            originals.push(nc);
        }
        let mut learnts = Vec::with_capacity(self.learnts.len());
        for &c in &self.learnts {
            let nc = relocate(&self.arena, c, &mut arena);
            forward.insert(c, nc);
            learnts.push(nc);
        }
        for &l in &self.trail {
            let v = var(l);
            let r = self.reason[v];
            if r != NO_REASON {
                self.reason[v] = forward.get(&r).copied().unwrap_or(NO_REASON);
            }
        }
        self.arena = arena;
        self.wasted = 0;
        self.originals = originals;
        self.learnts = learnts;
        for w in self.watches.iter_mut() {
            w.clear();
        }
        for i in 0..self.originals.len() {
            self.attach(self.originals[i]);
        }
        for i in 0..self.learnts.len() {
            self.attach(self.learnts[i]);
        }
    }

    /// Model from the last satisfiable call, indexed by DIMACS variable
    /// (entry 0 unused).
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    /// Solves under DIMACS `assumptions`.
    pub fn solve(&mut self, assumptions: &[i32], limits: &SolveLimits) -> SolveStatus {
        self.model.clear();
        if !self.ok {
            return SolveStatus::Unsat;
        }
        let max = assumptions
            .iter()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        self.reserve_vars(max);
        let assumps: Vec<u32> = assumptions.iter().map(|&l| from_dimacs(l)).collect();
        let start_conflicts = self.stats.conflicts;
        let status = self.search(&assumps, limits, start_conflicts);
        if status == SolveStatus::Sat {
            self.model = vec![false; self.num_vars + 1];
            for v in 0..self.num_vars {
                self.model[v + 1] = self.vals[2 * v] == 1;
            }
        }
        self.cancel_until(0);
        status
    }

    fn search(
        &mut self,
        assumps: &[u32],
        limits: &SolveLimits,
        start_conflicts: u64,
    ) -> SolveStatus {
        let mut decisions_since_check = 0u32;
        loop {
            let confl = self.propagate();
            if confl != NO_REASON {
                self.stats.conflicts += 1;
                self.conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveStatus::Unsat;
                }
                let (learnt, bt, lbd) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let c = self.alloc(&learnt, true, lbd);
                    self.learnts.push(c);
                    self.attach(c);
                    self.bump_clause(c);
                    self.enqueue(learnt[0], c);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                self.lbd_fast.update(lbd as f64);
                self.lbd_slow.update(lbd as f64);

                if limits.budget.is_cancelled() {
                    return SolveStatus::Interrupted;
                }
                let used = self.stats.conflicts - start_conflicts;
                if limits.max_conflicts.is_some_and(|m| used >= m) {
                    return SolveStatus::Interrupted;
                }
                if used.is_multiple_of(64) && limits.budget.timed_out() {
                    return SolveStatus::Interrupted;
                }
                if self.stats.conflicts >= self.next_reduce {
                    self.reduce_count += 1;
                    self.next_reduce = self.stats.conflicts + 2000 + 300 * self.reduce_count;
                    self.reduce_db();
                }
                if self.conflicts_since_restart >= 50
                    && self.stats.conflicts > 4096
                    && self.lbd_fast.value > 1.25 * self.lbd_slow.value
                {
                    self.conflicts_since_restart = 0;
                    self.stats.restarts += 1;
                    self.cancel_until(0);
                }
            } else {
                let dl = self.decision_level();
                let next = if dl < assumps.len() {
                    let p = assumps[dl];
                    match self.value(p) {
                        1 => {
                            self.trail_lim.push(self.trail.len());
                            continue;
                        }
                        -1 => return SolveStatus::Unsat,
                        _ => p,
                    }
                } else {
                    decisions_since_check += 1;
                    if decisions_since_check >= 4096 {
                        decisions_since_check = 0;
                        if limits.budget.stop_reason().is_some() {
                            return SolveStatus::Interrupted;
                        }
                    }
                    match self.pick_branch() {
                        Some(l) => l,
                        None => return SolveStatus::Sat,
                    }
                };
                self.stats.decisions += 1;
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }
}
