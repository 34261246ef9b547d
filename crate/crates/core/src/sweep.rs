// SPDX-License-Identifier: Apache-2.0

//! Simulation-driven sweeping of a miter.
//!
//! Random simulation groups nodes into classes of candidate equivalences.
//! Each candidate pair becomes a self-contained sub-miter that is handed to
//! the engine layer; proven pairs are merged, refuted pairs refine the
//! classes. The remaining output cone is discharged last.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::check::{verify_witness, Budget, CheckResult, UnknownReason};
use crate::xag::{Lit, Xag, XagBuilder};

/// `words` random words for each of `num_pis` inputs, PI-major.
pub fn random_pi_words(num_pis: usize, words: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_pis * words).map(|_| rng.gen()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub node: usize,
    /// `min(value, !value)` over all patterns.
    pub bits: Vec<u64>,
    /// Set when `bits` is the complement of the node's value.
    pub polarity: bool,
}

fn canonical(bits: &[u64]) -> (Vec<u64>, bool) {
    let flip = bits.first().is_some_and(|w| w >> 63 == 1);
    let mask = if flip { !0 } else { 0 };
    (bits.iter().map(|w| w ^ mask).collect(), flip)
}

fn signatures_of(sim: &[u64], words: usize, nodes: impl Iterator<Item = usize>) -> Vec<Signature> {
    nodes
        .map(|node| {
            let (bits, polarity) = canonical(&sim[node * words..(node + 1) * words]);
            Signature {
                node,
                bits,
                polarity,
            }
        })
        .collect()
}

/// Signatures of every node (node 0 included) under seeded random patterns.
pub fn random_simulate(xag: &Xag, num_words: usize, seed: u64) -> Vec<Signature> {
    assert!(num_words >= 1);
    let pis = random_pi_words(xag.num_pis(), num_words, seed);
    let sim = xag.simulate(&pis, num_words);
    signatures_of(&sim, num_words, 0..xag.num_nodes())
}

/// Candidate equivalence class. Member `(v, p)` satisfies
/// `value(v) ^ p == value(rep) ^ p_rep` on every simulated pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeClass {
    pub members: Vec<(usize, bool)>,
    pub representative: usize,
}

impl PeClass {
    /// Whether `member` is the complement of the representative.
    pub fn relative_polarity(&self, member: usize) -> Option<bool> {
        let rep = self.members.iter().find(|m| m.0 == self.representative)?.1;
        self.members
            .iter()
            .find(|m| m.0 == member)
            .map(|m| m.1 ^ rep)
    }
}

/// Groups nodes by canonical signature, drops singletons and orders the
/// classes by representative.
pub fn build_pe_classes(signatures: &[Signature]) -> Vec<PeClass> {
    let mut groups: FxHashMap<&[u64], Vec<(usize, bool)>> = FxHashMap::default();
    for s in signatures {
        groups
            .entry(&s.bits)
            .or_default()
            .push((s.node, s.polarity));
    }
    let mut classes: Vec<PeClass> = groups
        .into_values()
        .filter(|m| m.len() >= 2)
        .map(|mut members| {
            members.sort_unstable();
            PeClass {
                representative: members[0].0,
                members,
            }
        })
        .collect();
    classes.sort_unstable_by_key(|c| c.representative);
    classes
}

/// One simulation word: bit 0 is `pattern`, the other 63 bits are copies
/// with one to three inputs flipped.
pub fn cex_batch(pattern: &[bool], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let n = pattern.len();
    let mut w: Vec<u64> = pattern.iter().map(|&b| if b { !0 } else { 0 }).collect();
    if n == 0 {
        return w;
    }
    for bit in 1..64 {
        let flips = rng.gen_range(1..=3usize.min(n));
        for _ in 0..flips {
            let i = rng.gen_range(0..n);
            w[i] ^= 1 << bit;
        }
    }
    w
}

/// Splits every class by the values of `pattern` and its perturbations.
pub fn refine_with_cex(
    xag: &Xag,
    classes: &[PeClass],
    pattern: &[bool],
    seed: u64,
) -> Vec<PeClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = cex_batch(pattern, &mut rng);
    let sim = xag.simulate(&word, 1);
    refine_by_word(classes, &sim)
}

fn refine_by_word(classes: &[PeClass], sim: &[u64]) -> Vec<PeClass> {
    let mut out = Vec::new();
    for c in classes {
        let mut groups: Vec<(u64, Vec<(usize, bool)>)> = Vec::new();
        for &(v, p) in &c.members {
            let key = sim[v] ^ if p { !0 } else { 0 };
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => g.1.push((v, p)),
                None => groups.push((key, vec![(v, p)])),
            }
        }
        for (_, members) in groups {
            if members.len() >= 2 {
                out.push(PeClass {
                    representative: members[0].0,
                    members,
                });
            }
        }
    }
    out.sort_unstable_by_key(|c| c.representative);
    out
}

/// Proven merges: node `b` replaced by an earlier literal.
#[derive(Clone, Debug)]
pub struct Merges {
    map: Vec<Option<Lit>>,
    count: usize,
}

impl Merges {
    pub fn new(num_nodes: usize) -> Merges {
        Merges {
            map: vec![None; num_nodes],
            count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, node: usize) -> Option<Lit> {
        self.map[node]
    }

    /// Replaces `node` by `by`, which must refer to an earlier node.
    pub fn merge(&mut self, node: usize, by: Lit) {
        assert!(
            by.node() < node,
            "merge target must precede the merged node"
        );
        assert!(self.map[node].is_none());
        self.map[node] = Some(by);
        self.count += 1;
    }

    /// Follows merges until an unmerged node is reached.
    pub fn resolve(&self, mut l: Lit) -> Lit {
        while let Some(r) = self.map[l.node()] {
            l = r.negate_if(l.is_negated());
        }
        l
    }
}

/// A self-contained proof obligation: its single output is constant zero
/// iff the obligation holds.
#[derive(Clone, Debug)]
pub struct SubMiter {
    pub id: usize,
    pub circuit: Xag,
    /// Node pair in the parent miter; the final obligation uses `(output, 0)`.
    pub origin: (usize, usize),
    /// `pi_map[i]` is the parent PI driving sub-miter PI `i`.
    pub pi_map: Vec<usize>,
    /// Merges that were substituted into the cone, `(merged, replacement)`.
    pub merged_history: Vec<(usize, Lit)>,
}

impl SubMiter {
    /// Lifts a sub-miter input assignment to the parent miter. Inputs
    /// outside the cone are 0.
    pub fn lift_witness(&self, w: &[bool], parent_pis: usize) -> Vec<bool> {
        let mut full = vec![false; parent_pis];
        for (i, &p) in self.pi_map.iter().enumerate() {
            full[p] = w[i];
        }
        full
    }
}

struct ConeBuild {
    builder: XagBuilder,
    lits: Vec<Option<Lit>>,
    pi_map: Vec<usize>,
    history: Vec<(usize, Lit)>,
}

/// Builds the cone of the (already resolved) `roots` with every merged
/// node substituted. With `keep_pis` all parent PIs are kept in order.
fn build_cone(xag: &Xag, roots: &[Lit], merges: &Merges, keep_pis: bool) -> ConeBuild {
    let n = xag.num_nodes();
    let mut needed = vec![false; n];
    for r in roots {
        needed[r.node()] = true;
    }
    let mut history = Vec::new();
    for v in (1..n).rev() {
        if !needed[v] {
            continue;
        }
        if let Some(r) = merges.get(v) {
            needed[r.node()] = true;
            history.push((v, r));
        } else if xag.is_gate(v) {
            for f in xag.gate(v).fanins() {
                needed[f.node()] = true;
            }
        }
    }
    history.reverse();
    let pi_map: Vec<usize> = (0..xag.num_pis())
        .filter(|&i| keep_pis || needed[i + 1])
        .collect();
    let mut builder = XagBuilder::new(pi_map.len());
    let mut lits: Vec<Option<Lit>> = vec![None; n];
    lits[0] = Some(Lit::FALSE);
    for (k, &i) in pi_map.iter().enumerate() {
        lits[i + 1] = Some(builder.pi(k));
    }
    for v in xag.gate_nodes() {
        if !needed[v] {
            continue;
        }
        let map = |lits: &[Option<Lit>], l: Lit| {
            lits[l.node()]
                .expect("fanin built")
                .negate_if(l.is_negated())
        };
        let l = match merges.get(v) {
            Some(r) => map(&lits, r),
            None => {
                let g = *xag.gate(v);
                let (a, b) = (map(&lits, g.in0), map(&lits, g.in1));
                builder.gate(g.kind, a, b)
            }
        };
        lits[v] = Some(l);
    }
    ConeBuild {
        builder,
        lits,
        pi_map,
        history,
    }
}

fn image(cb: &ConeBuild, l: Lit) -> Lit {
    cb.lits[l.node()]
        .expect("root built")
        .negate_if(l.is_negated())
}

/// Sub-miter asserting `a == b ^ complement` under `merges`.
pub fn extract_submiter(
    xag: &Xag,
    a: usize,
    b: usize,
    complement: bool,
    merges: &Merges,
    id: usize,
) -> SubMiter {
    let ra = merges.resolve(Lit::new(a, false));
    let rb = merges.resolve(Lit::new(b, complement));
    let mut cb = build_cone(xag, &[ra, rb], merges, false);
    let (la, lb) = (image(&cb, ra), image(&cb, rb));
    let o = cb.builder.xor(la, lb);
    SubMiter {
        id,
        circuit: cb.builder.build(vec![o]),
        origin: (a, b),
        pi_map: cb.pi_map,
        merged_history: cb.history,
    }
}

/// Sub-miter of the output cone of `xag` under `merges`.
pub fn extract_output_submiter(xag: &Xag, merges: &Merges, id: usize) -> SubMiter {
    let out = xag.output();
    let r = merges.resolve(out);
    let cb = build_cone(xag, &[r], merges, false);
    let o = image(&cb, r);
    SubMiter {
        id,
        circuit: cb.builder.build(vec![o]),
        origin: (out.node(), 0),
        pi_map: cb.pi_map,
        merged_history: cb.history,
    }
}

/// The miter after substituting every merge, keeping all PIs.
pub fn reduced_miter(xag: &Xag, merges: &Merges) -> Xag {
    let r = merges.resolve(xag.output());
    let cb = build_cone(xag, &[r], merges, true);
    let o = image(&cb, r);
    cb.builder.build(vec![o])
}

/// Nodes in the output cone once merges are substituted, merged nodes
/// excluded.
pub fn alive_mask(xag: &Xag, merges: &Merges) -> Vec<bool> {
    let n = xag.num_nodes();
    let mut alive = vec![false; n];
    alive[merges.resolve(xag.output()).node()] = true;
    for v in (1..n).rev() {
        if !alive[v] {
            continue;
        }
        if let Some(r) = merges.get(v) {
            alive[v] = false;
            alive[r.node()] = true;
        } else if xag.is_gate(v) {
            for f in xag.gate(v).fanins() {
                alive[f.node()] = true;
            }
        }
    }
    alive
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Obligation {
    /// Candidate pair; failure only leaves the pair unmerged.
    Pair,
    /// The remaining output cone.
    Final,
}

/// The engine layer as seen by the sweep.
pub trait ObligationSolver {
    fn check(&mut self, sm: &SubMiter, obligation: Obligation, budget: &Budget) -> CheckResult;
}

impl<F> ObligationSolver for F
where
    F: FnMut(&SubMiter, Obligation, &Budget) -> CheckResult,
{
    fn check(&mut self, sm: &SubMiter, obligation: Obligation, budget: &Budget) -> CheckResult {
        self(sm, obligation, budget)
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    /// Random words per round (64 patterns each).
    pub sim_words: usize,
    pub seed: u64,
    pub pair_timeout: Duration,
    pub max_rounds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sim_words: 64,
            seed: 1,
            pair_timeout: Duration::from_secs(2),
            max_rounds: 8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub rounds: usize,
    pub submiters: usize,
    pub pairs_proven: usize,
    pub pairs_refuted: usize,
    pub pairs_unknown: usize,
    /// Pairs whose sub-miter folded to zero during extraction.
    pub structural_merges: usize,
    pub merges: usize,
    /// Alive node count after every merge, starting with the initial count.
    pub alive_history: Vec<usize>,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub result: CheckResult,
    pub stats: SweepStats,
    pub merges: Merges,
}

fn witness_from_sim(
    pi_words: &[u64],
    words: usize,
    num_pis: usize,
    word: usize,
    bit: u32,
) -> Vec<bool> {
    (0..num_pis)
        .map(|i| (pi_words[i * words + word] >> bit) & 1 == 1)
        .collect()
}

/// Proves or refutes that the single output of `miter` is constant zero.
///
/// Every counterexample returned is checked on `miter` itself.
pub fn sweep(
    miter: &Xag,
    config: &SweepConfig,
    engine: &mut dyn ObligationSolver,
    budget: &Budget,
) -> SweepOutcome {
    let start = Instant::now();
    let num_pis = miter.num_pis();
    let mut merges = Merges::new(miter.num_nodes());
    let mut stats = SweepStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let mut cex_words: Vec<Vec<u64>> = Vec::new();
    let mut failed: rustc_hash::FxHashSet<(usize, usize)> = Default::default();
    let mut next_id = 0usize;
    let out_node = miter.output().node();
    stats
        .alive_history
        .push(alive_mask(miter, &merges).iter().filter(|&&a| a).count());

    let finish = |result: CheckResult, mut stats: SweepStats, merges: Merges| {
        stats.wall = start.elapsed();
        SweepOutcome {
            result,
            stats,
            merges,
        }
    };

    for round in 0..config.max_rounds {
        if let Some(why) = budget.stop_reason() {
            return finish(CheckResult::Unknown(why), stats, merges);
        }
        stats.rounds = round + 1;
        let words = config.sim_words.max(1) + cex_words.len();
        let random = random_pi_words(
            num_pis,
            config.sim_words.max(1),
            config.seed.wrapping_add(round as u64),
        );
        let mut pi_words = Vec::with_capacity(num_pis * words);
        for i in 0..num_pis {
            pi_words.extend_from_slice(
                &random[i * config.sim_words.max(1)..(i + 1) * config.sim_words.max(1)],
            );
            pi_words.extend(cex_words.iter().map(|w| w[i]));
        }
        let sim = miter.simulate(&pi_words, words);

        let out = miter.output();
        let mask = if out.is_negated() { !0 } else { 0 };
        for w in 0..words {
            let v = sim[out_node * words + w] ^ mask;
            if v != 0 {
                let wit = witness_from_sim(&pi_words, words, num_pis, w, v.trailing_zeros());
                assert!(verify_witness(miter, &wit));
                return finish(CheckResult::Counterexample(wit), stats, merges);
            }
        }

        let mut alive = alive_mask(miter, &merges);
        let nodes = (0..miter.num_nodes()).filter(|&v| (v == 0 || alive[v]) && v != out_node);
        let mut classes = build_pe_classes(&signatures_of(&sim, words, nodes));
        let mut candidates: Vec<usize> = classes
            .iter()
            .flat_map(|c| {
                c.members
                    .iter()
                    .map(|m| m.0)
                    .filter(|&v| v != c.representative)
            })
            .collect();
        candidates.sort_unstable();

        let mut class_of: Vec<u32> = vec![u32::MAX; miter.num_nodes()];
        let index = |classes: &[PeClass], class_of: &mut Vec<u32>| {
            class_of.fill(u32::MAX);
            for (ci, c) in classes.iter().enumerate() {
                for m in &c.members {
                    class_of[m.0] = ci as u32;
                }
            }
        };
        index(&classes, &mut class_of);

        let mut progress = false;
        for b in candidates {
            if let Some(why) = budget.stop_reason() {
                return finish(CheckResult::Unknown(why), stats, merges);
            }
            if class_of[b] == u32::MAX || !alive[b] {
                continue;
            }
            let class = &classes[class_of[b] as usize];
            // a dead representative would be pulled back into the cone
            let Some(&(a, pa)) = class
                .members
                .iter()
                .find(|m| m.0 < b && (m.0 == 0 || alive[m.0]))
            else {
                continue;
            };
            if failed.contains(&(a, b)) {
                continue;
            }
            let pb = class
                .members
                .iter()
                .find(|m| m.0 == b)
                .expect("member of its class")
                .1;
            let complement = pa ^ pb;
            let sm = extract_submiter(miter, a, b, complement, &merges, next_id);
            let o = sm.circuit.output();
            if o == Lit::FALSE {
                merges.merge(b, Lit::new(a, complement));
                stats.structural_merges += 1;
                stats.merges += 1;
                alive = alive_mask(miter, &merges);
                stats
                    .alive_history
                    .push(alive.iter().filter(|&&x| x).count());
                progress = true;
                continue;
            }
            next_id += 1;
            stats.submiters += 1;
            let pair_budget = budget.child_limited(config.pair_timeout);
            match engine.check(&sm, Obligation::Pair, &pair_budget) {
                CheckResult::Equivalent => {
                    merges.merge(b, Lit::new(a, complement));
                    stats.pairs_proven += 1;
                    stats.merges += 1;
                    alive = alive_mask(miter, &merges);
                    stats
                        .alive_history
                        .push(alive.iter().filter(|&&x| x).count());
                    progress = true;
                }
                CheckResult::Counterexample(w) => {
                    stats.pairs_refuted += 1;
                    let pattern = sm.lift_witness(&w, num_pis);
                    let word = cex_batch(&pattern, &mut rng);
                    let wsim = miter.simulate(&word, 1);
                    debug_assert!(
                        ((wsim[a] ^ wsim[b]) & 1 == 1) != complement,
                        "counterexample does not separate the pair"
                    );
                    classes = refine_by_word(&classes, &wsim);
                    index(&classes, &mut class_of);
                    cex_words.push(word);
                    progress = true;
                    // the batch may already expose the miter output
                    let v = wsim[out_node] ^ mask;
                    if v != 0 {
                        let wit = witness_from_sim(
                            &cex_words[cex_words.len() - 1],
                            1,
                            num_pis,
                            0,
                            v.trailing_zeros(),
                        );
                        assert!(verify_witness(miter, &wit));
                        return finish(CheckResult::Counterexample(wit), stats, merges);
                    }
                }
                CheckResult::Unknown(UnknownReason::Cancelled) if budget.is_cancelled() => {
                    return finish(
                        CheckResult::Unknown(UnknownReason::Cancelled),
                        stats,
                        merges,
                    );
                }
                CheckResult::Unknown(_) => {
                    stats.pairs_unknown += 1;
                    failed.insert((a, b));
                }
            }
        }
        if !progress {
            break;
        }
    }

    if let Some(why) = budget.stop_reason() {
        return finish(CheckResult::Unknown(why), stats, merges);
    }
    let sm = extract_output_submiter(miter, &merges, next_id);
    let result = match sm.circuit.output() {
        Lit::FALSE => CheckResult::Equivalent,
        o => {
            let r = if o == Lit::TRUE {
                CheckResult::Counterexample(vec![false; sm.circuit.num_pis()])
            } else {
                stats.submiters += 1;
                engine.check(&sm, Obligation::Final, &budget.child())
            };
            match r {
                CheckResult::Counterexample(w) => {
                    let full = sm.lift_witness(&w, num_pis);
                    assert!(
                        verify_witness(miter, &full),
                        "witness does not verify on the original miter"
                    );
                    CheckResult::Counterexample(full)
                }
                other => other,
            }
        }
    };
    finish(result, stats, merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xag::truth_tables;

    #[test]
    fn xor_with_complement_joins_constant_class() {
        let mut b = XagBuilder::new(1);
        let a = b.pi(0);
        let t = b.and(a, a);
        let _ = t;
        let g = crate::xag::Gate {
            kind: crate::xag::GateKind::Xor,
            in0: a,
            in1: !a,
        };
        let x = Xag::from_parts(1, vec![g], vec![Lit::new(2, false)]).unwrap();
        let sigs = random_simulate(&x, 4, 3);
        assert!(sigs[2].bits.iter().all(|&w| w == 0));
        assert!(sigs[2].polarity);
        let classes = build_pe_classes(&sigs);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].representative, 0);
    }

    #[test]
    fn deterministic_signatures() {
        let x = crate::gen::random_xag(8, 60, 0.3, 2);
        assert_eq!(random_simulate(&x, 64, 1), random_simulate(&x, 64, 1));
    }

    #[test]
    fn distinct_signatures_no_classes() {
        let mut b = XagBuilder::new(2);
        let o = b.and(b.pi(0), b.pi(1));
        let x = b.build(vec![o]);
        let sigs = random_simulate(&x, 4, 9);
        assert!(build_pe_classes(&sigs[1..]).is_empty());
    }

    #[test]
    fn refinement_splits_and_is_idempotent() {
        // a&b and a&b&c agree except when a=b=1, c=0
        let mut bl = XagBuilder::new(3);
        let ab = bl.and(bl.pi(0), bl.pi(1));
        let abc = bl.and(ab, bl.pi(2));
        let x = bl.build(vec![abc]);
        let c = PeClass {
            members: vec![(ab.node(), false), (abc.node(), false)],
            representative: ab.node(),
        };
        let same = refine_with_cex(&x, std::slice::from_ref(&c), &[false, false, false], 1);
        let _ = same;
        let split = refine_with_cex(&x, std::slice::from_ref(&c), &[true, true, false], 1);
        assert!(split
            .iter()
            .all(|k| !(k.members.iter().any(|m| m.0 == ab.node())
                && k.members.iter().any(|m| m.0 == abc.node()))));
        let again = refine_with_cex(&x, &split, &[true, true, false], 1);
        assert_eq!(again, split);
    }

    #[test]
    fn twins_collapse_at_extraction() {
        let g = crate::xag::Gate {
            kind: crate::xag::GateKind::And,
            in0: Lit::new(1, false),
            in1: Lit::new(2, true),
        };
        let m = Xag::from_parts(2, vec![g, g], vec![Lit::new(4, false)]).unwrap();
        let merges = Merges::new(m.num_nodes());
        let sm = extract_submiter(&m, 3, 4, false, &merges, 0);
        assert_eq!(sm.circuit.output(), Lit::FALSE);
        assert_eq!(sm.origin, (3, 4));
    }

    #[test]
    fn multiplier_sweep_eq_with_sat() {
        let m = crate::gen::gen_multiplier_miter(
            4,
            crate::gen::MultArch::Array,
            crate::gen::MultArch::Diagonal,
        )
        .unwrap();
        let mut engine = |sm: &SubMiter, _: Obligation, b: &Budget| {
            let limits = crate::sat::SolveLimits {
                budget: b.clone(),
                max_conflicts: None,
            };
            crate::sat::sat_check(&sm.circuit, &limits).0
        };
        let out = sweep(
            &m,
            &SweepConfig::default(),
            &mut engine,
            &Budget::unlimited(),
        );
        assert_eq!(out.result, CheckResult::Equivalent);
        let r = reduced_miter(&m, &out.merges);
        assert_eq!(truth_tables(&r), truth_tables(&m));
        assert!(out.stats.alive_history.windows(2).all(|w| w[1] <= w[0]));
    }
}
