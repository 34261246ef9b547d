// SPDX-License-Identifier: Apache-2.0

//! Benchmark circuit generators: unsigned multipliers, random XAGs and
//! single-gate mutations.
//!
//! Multiplier inputs are interleaved: PI `2i` is `a[i]`, PI `2i + 1` is
//! `b[i]`. Output `k` is product bit `k`, LSB first.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::XagError;
use crate::miter::build_miter;
use crate::xag::{Gate, GateKind, Lit, Xag, XagBuilder};

/// Partial-product accumulation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MultArch {
    /// Carry-save array: one partial-product row per stage, carries passed
    /// to the next row.
    Array,
    /// Column compression: each anti-diagonal (bit weight) is reduced to two
    /// bits with full adders in FIFO order before moving to the next one.
    Diagonal,
}

impl fmt::Display for MultArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultArch::Array => "array",
            MultArch::Diagonal => "diagonal",
        })
    }
}

impl FromStr for MultArch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "array" => Ok(MultArch::Array),
            "diagonal" => Ok(MultArch::Diagonal),
            other => Err(format!("unknown multiplier architecture '{other}'")),
        }
    }
}

fn full_adder(b: &mut XagBuilder, x: Lit, y: Lit, z: Lit) -> (Lit, Lit) {
    let xy = b.xor(x, y);
    let s = b.xor(xy, z);
    let c1 = b.and(x, y);
    let c2 = b.and(xy, z);
    (s, b.or(c1, c2))
}

fn half_adder(b: &mut XagBuilder, x: Lit, y: Lit) -> (Lit, Lit) {
    (b.xor(x, y), b.and(x, y))
}

/// Adds up to three bits of equal weight: `(sum, carry)`.
fn add_bits(b: &mut XagBuilder, bits: &[Lit]) -> (Option<Lit>, Option<Lit>) {
    match *bits {
        [] => (None, None),
        [x] => (Some(x), None),
        [x, y] => {
            let (s, c) = half_adder(b, x, y);
            (Some(s), Some(c))
        }
        [x, y, z] => {
            let (s, c) = full_adder(b, x, y, z);
            (Some(s), Some(c))
        }
        _ => unreachable!("at most three bits per adder"),
    }
}

/// Ripple-carry addition of two rows of weight-aligned bits starting at `from`.
fn ripple(
    b: &mut XagBuilder,
    r0: &[Option<Lit>],
    r1: &[Option<Lit>],
    from: usize,
    out: &mut [Lit],
) {
    let mut carry: Option<Lit> = None;
    for w in from..out.len() {
        let bits: Vec<Lit> = [r0[w], r1[w], carry].into_iter().flatten().collect();
        let (s, c) = add_bits(b, &bits);
        out[w] = s.unwrap_or(Lit::FALSE);
        carry = c;
    }
}

fn multiplier_into(b: &mut XagBuilder, width: usize, arch: MultArch) -> Vec<Lit> {
    let a: Vec<Lit> = (0..width).map(|i| b.pi(2 * i)).collect();
    let m: Vec<Lit> = (0..width).map(|i| b.pi(2 * i + 1)).collect();
    let pw = 2 * width;
    let mut product = vec![Lit::FALSE; pw];
    match arch {
        MultArch::Array => {
            let mut sum: Vec<Option<Lit>> = vec![None; pw + 1];
            let mut carry: Vec<Option<Lit>> = vec![None; pw + 1];
            for i in 0..width {
                let mut next_sum = sum.clone();
                let mut next_carry: Vec<Option<Lit>> = vec![None; pw + 1];
                for j in 0..width {
                    let w = i + j;
                    let pp = b.and(a[j], m[i]);
                    let bits: Vec<Lit> =
                        [Some(pp), sum[w], carry[w]].into_iter().flatten().collect();
                    let (s, c) = add_bits(b, &bits);
                    next_sum[w] = s;
                    next_carry[w + 1] = c;
                }
                sum = next_sum;
                carry = next_carry;
                product[i] = sum[i].unwrap_or(Lit::FALSE);
            }
            ripple(b, &sum, &carry, width, &mut product);
        }
        MultArch::Diagonal => {
            let mut row0: Vec<Option<Lit>> = vec![None; pw + 1];
            let mut row1: Vec<Option<Lit>> = vec![None; pw + 1];
            let mut incoming: VecDeque<Lit> = VecDeque::new();
            for w in 0..pw {
                let mut column: VecDeque<Lit> = std::mem::take(&mut incoming);
                for i in 0..width {
                    if w >= i && w - i < width {
                        let pp = b.and(a[w - i], m[i]);
                        column.push_back(pp);
                    }
                }
                while column.len() > 2 {
                    let x = column.pop_front().unwrap();
                    let y = column.pop_front().unwrap();
                    let z = column.pop_front().unwrap();
                    let (s, c) = full_adder(b, x, y, z);
                    column.push_back(s);
                    incoming.push_back(c);
                }
                row0[w] = column.pop_front();
                row1[w] = column.pop_front();
            }
            ripple(b, &row0, &row1, 0, &mut product);
        }
    }
    product
}

/// An unsigned `width x width` multiplier with `2 * width` outputs.
pub fn gen_multiplier(width: usize, arch: MultArch) -> Result<Xag, XagError> {
    if !(2..=32).contains(&width) {
        return Err(XagError::WidthOutOfRange(width));
    }
    let mut b = XagBuilder::new(2 * width);
    let outs = multiplier_into(&mut b, width, arch);
    Ok(b.build(outs))
}

/// Miter of two multipliers of the given architectures. Always UNSAT.
pub fn gen_multiplier_miter(
    width: usize,
    arch_a: MultArch,
    arch_b: MultArch,
) -> Result<Xag, XagError> {
    let a = gen_multiplier(width, arch_a)?;
    let b = gen_multiplier(width, arch_b)?;
    build_miter(&a, &b)
}

/// Copy of `xag` with PIs `2i` and `2i + 1` exchanged. On an interleaved
/// multiplier this computes `b * a` with the same structure.
pub fn swap_operands(xag: &Xag) -> Xag {
    assert!(xag.num_pis().is_multiple_of(2));
    let mut b = XagBuilder::new(xag.num_pis());
    let pis: Vec<Lit> = (0..xag.num_pis()).map(|i| b.pi(i ^ 1)).collect();
    let m = b.import_with(xag, &pis);
    let outs = xag
        .outputs()
        .iter()
        .map(|o| m[o.node()].negate_if(o.is_negated()))
        .collect();
    b.build(outs)
}

/// Random single-output XAG. Fanins favour recent nodes so the graph has depth.
pub fn random_xag(num_pis: usize, num_gates: usize, xor_ratio: f64, seed: u64) -> Xag {
    assert!(num_pis >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = XagBuilder::new(num_pis);
    let mut pool: Vec<Lit> = (0..num_pis).map(|i| b.pi(i)).collect();
    let mut last = pool[0];
    for _ in 0..num_gates {
        let pick = |rng: &mut ChaCha8Rng, pool: &[Lit]| {
            let n = pool.len();
            let idx = if rng.gen_bool(0.6) {
                n - 1 - rng.gen_range(0..n.min(8))
            } else {
                rng.gen_range(0..n)
            };
            pool[idx].negate_if(rng.gen_bool(0.5))
        };
        let x = pick(&mut rng, &pool);
        let y = pick(&mut rng, &pool);
        let kind = if rng.gen_bool(xor_ratio) {
            GateKind::Xor
        } else {
            GateKind::And
        };
        let l = b.gate(kind, x, y);
        if !l.is_const() && !pool.contains(&l.positive()) {
            pool.push(l.positive());
        }
        last = l;
    }
    b.build(vec![last.negate_if(rng.gen_bool(0.5))])
}

/// Copy of `xag` with gate number `gate_index` switched between AND and XOR.
pub fn mutate_gate(xag: &Xag, gate_index: usize) -> Xag {
    let mut gates = xag.gates().to_vec();
    let g = &mut gates[gate_index];
    *g = Gate {
        kind: match g.kind {
            GateKind::And => GateKind::Xor,
            GateKind::Xor => GateKind::And,
        },
        ..*g
    };
    Xag::from_parts(xag.num_pis(), gates, xag.outputs().to_vec()).expect("same topology")
}
