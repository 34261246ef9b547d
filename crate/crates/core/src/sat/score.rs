// SPDX-License-Identifier: Apache-2.0

//! Structural scoring of splitting variables.

use std::collections::BTreeMap;

use crate::cube::{propagate_constants, Cube};
use crate::error::XagError;
use crate::features::{distances, xor_chains, UNREACHABLE};
use crate::xag::Xag;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreParams {
    /// Weight of the output distance in the chain-node distance.
    pub alpha_dist: f64,
    /// Multiplier applied to chain cut points.
    pub bump: f64,
    /// Self weight during score propagation.
    pub factor: f64,
    pub rounds: usize,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            alpha_dist: 0.6,
            bump: 1.5,
            factor: 0.7,
            rounds: 2,
        }
    }
}

/// Distance used in the chain score.
#[inline]
pub fn chain_distance(alpha_dist: f64, odis: u32, idis: u32) -> f64 {
    alpha_dist * odis as f64 + (1.0 - alpha_dist) * idis as f64 + 1.0
}

/// Raw chain score `|c|^2 / d`.
#[inline]
pub fn chain_score(chain_len: usize, d: f64) -> f64 {
    (chain_len * chain_len) as f64 / d
}

/// Scores over the nodes of `xag` itself (no cube). Entry `v` is the score
/// of node `v`; the constant node and nodes outside the output cone score 0.
pub fn score_nodes(xag: &Xag, p: &ScoreParams) -> Vec<f64> {
    let n = xag.num_nodes();
    let mut sc = vec![0f64; n];
    let chains = xor_chains(xag);
    let (idis, odis) = distances(xag);
    let (off, targets) = xag.fanouts();
    let mut in_chain = vec![usize::MAX; n];
    for (ci, c) in chains.iter().enumerate() {
        for &v in c {
            in_chain[v] = ci;
        }
    }
    let out_node = xag.output().node();
    for (ci, c) in chains.iter().enumerate() {
        for &v in c {
            let od = if odis[v] == UNREACHABLE { 0 } else { odis[v] };
            let d = chain_distance(p.alpha_dist, od, idis[v]);
            let mut s = chain_score(c.len(), d);
            let escapes = v == out_node
                || targets[off[v] as usize..off[v + 1] as usize]
                    .iter()
                    .any(|&t| in_chain[t as usize] != ci);
            if escapes {
                s *= p.bump;
            }
            sc[v] = s;
        }
    }
    if p.rounds > 0 {
        let alive: Vec<bool> = {
            let mut m = xag.tfi_mask(xag.outputs());
            m[0] = false;
            m
        };
        for _ in 0..p.rounds {
            let mut next = sc.clone();
            for v in 1..n {
                if !alive[v] {
                    continue;
                }
                let mut sum = 0.0;
                let mut cnt = 0usize;
                if xag.is_gate(v) {
                    for f in xag.gate(v).fanins() {
                        if f.node() != 0 {
                            sum += sc[f.node()];
                            cnt += 1;
                        }
                    }
                }
                for &t in &targets[off[v] as usize..off[v + 1] as usize] {
                    sum += sc[t as usize];
                    cnt += 1;
                }
                if cnt > 0 {
                    next[v] = p.factor * sc[v] + (1.0 - p.factor) * sum / cnt as f64;
                }
            }
            sc = next;
        }
    }
    sc
}

/// Scores for the nodes of `xag` that stay alive after propagating `cube`.
///
/// Keys are node indices of `xag`. When several nodes collapse onto one
/// node of the simplified graph, the lowest index carries the score.
pub fn score_partition_vars(
    xag: &Xag,
    cube: &Cube,
    p: &ScoreParams,
) -> Result<BTreeMap<usize, f64>, XagError> {
    let prop = propagate_constants(xag, cube)?;
    let simplified = &prop.xag;
    let sc = score_nodes(simplified, p);
    let alive = simplified.tfi_mask(simplified.outputs());
    let mut taken = vec![false; simplified.num_nodes()];
    let mut out = BTreeMap::new();
    for (v, m) in prop.node_map.iter().enumerate() {
        let Some(l) = m else { continue };
        if l.is_const() || v == 0 {
            continue;
        }
        let t = l.node();
        if !alive[t] || taken[t] {
            continue;
        }
        taken[t] = true;
        out.insert(v, sc[t]);
    }
    Ok(out)
}

/// Best splitting node: highest score, ties to the lowest index; when all
/// scores are zero, the node with the highest fanout in the simplified graph.
pub fn best_split_var(xag: &Xag, cube: &Cube, p: &ScoreParams) -> Result<Option<usize>, XagError> {
    let scores = score_partition_vars(xag, cube, p)?;
    let mut best: Option<(usize, f64)> = None;
    for (&v, &s) in &scores {
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((v, s));
        }
    }
    match best {
        Some((v, s)) if s > 0.0 => Ok(Some(v)),
        Some(_) => {
            let fo = xag.fanout_counts();
            let mut pick: Option<usize> = None;
            for &v in scores.keys() {
                if pick.is_none_or(|b| fo[v] > fo[b]) {
                    pick = Some(v);
                }
            }
            Ok(pick)
        }
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xag::XagBuilder;

    #[test]
    fn raw_score_example() {
        let d = chain_distance(0.6, 1, 3);
        assert!((d - 2.8).abs() < 1e-12);
        assert!((chain_score(5, d) - 8.928571428571429).abs() < 1e-9);
    }

    #[test]
    fn no_xor_all_zero() {
        let x = crate::gen::random_xag(6, 30, 0.0, 4);
        let s = score_partition_vars(&x, &Cube::new(), &ScoreParams::default()).unwrap();
        assert!(!s.is_empty());
        assert!(s.values().all(|&v| v == 0.0));
        assert!(best_split_var(&x, &Cube::new(), &ScoreParams::default())
            .unwrap()
            .is_some());
    }

    #[test]
    fn zero_rounds_gives_raw_scores() {
        // chain of 3 XORs feeding an AND
        let mut b = XagBuilder::new(5);
        let x1 = b.xor(b.pi(0), b.pi(1));
        let x2 = b.xor(x1, b.pi(2));
        let x3 = b.xor(x2, b.pi(3));
        let o = b.and(x3, b.pi(4));
        let x = b.build(vec![o]);
        let p = ScoreParams {
            bump: 1.0,
            rounds: 0,
            ..ScoreParams::default()
        };
        let s = score_partition_vars(&x, &Cube::new(), &p).unwrap();
        let (idis, odis) = distances(&x);
        for v in [x1, x2, x3] {
            let n = v.node();
            let expect = 9.0 / chain_distance(0.6, odis[n], idis[n]);
            assert!((s[&n] - expect).abs() < 1e-12);
        }
        assert_eq!(s[&o.node()], 0.0);
        // x3 escapes the chain into the AND: bumped
        let pb = ScoreParams {
            rounds: 0,
            ..ScoreParams::default()
        };
        let sb = score_partition_vars(&x, &Cube::new(), &pb).unwrap();
        assert!((sb[&x3.node()] - 1.5 * s[&x3.node()]).abs() < 1e-12);
        assert_eq!(sb[&x2.node()], s[&x2.node()]);
    }

    #[test]
    fn assigned_nodes_drop_out() {
        let mut b = XagBuilder::new(3);
        let x1 = b.xor(b.pi(0), b.pi(1));
        let o = b.xor(x1, b.pi(2));
        let x = b.build(vec![o]);
        let c = Cube::from_lits([x.pi(0)]).unwrap();
        let s = score_partition_vars(&x, &c, &ScoreParams::default()).unwrap();
        assert!(!s.contains_key(&1));
        assert!(s.contains_key(&2));
    }
}
