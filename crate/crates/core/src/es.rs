// SPDX-License-Identifier: Apache-2.0

//! Exhaustive simulation.
//!
//! The graph is compiled into a straight-line program over word registers.
//! Registers are reference counted and recycled through a LIFO free pool,
//! so the register file tracks the live cut rather than the gate count.
//! Execution enumerates all `2^n` input patterns, 2^14 at a time: the low 6
//! PIs ride the 64 bit lanes, the next 8 select one of 256 words.

use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::check::{verify_witness, Budget, CheckResult, UnknownReason};
use crate::xag::{GateKind, Lit, Xag, XagBuilder};

/// Largest PI count accepted for enumeration.
pub const MAX_ES_PIS: usize = 40;

/// Words per batch: 256 words of 64 lanes, 2^14 patterns.
pub const BATCH_WORDS: usize = 256;
const BATCH_BITS: usize = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EsError {
    #[error("{0} primary inputs exceed the exhaustive-simulation ceiling of {MAX_ES_PIS}")]
    TooManyInputs(usize),
    #[error("program has {0} outputs, expected 1")]
    NotSingleOutput(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    LoadPi,
    And,
    Xor,
    /// Writes all zeros; only used when the output is a constant.
    Zero,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Src {
    pub reg: u32,
    pub neg: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Instr {
    pub op: Op,
    pub dst: u32,
    pub src0: Src,
    pub src1: Src,
    pub pi: u32,
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |s: Src| format!("{}r{}", if s.neg { "!" } else { "" }, s.reg);
        match self.op {
            Op::LoadPi => write!(f, "r{} = LOAD_PI {}", self.dst, self.pi),
            Op::And => write!(f, "r{} = AND {} {}", self.dst, s(self.src0), s(self.src1)),
            Op::Xor => write!(f, "r{} = XOR {} {}", self.dst, s(self.src0), s(self.src1)),
            Op::Zero => write!(f, "r{} = ZERO", self.dst),
            Op::Output => write!(f, "OUTPUT {}", s(self.src0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrProgram {
    pub instrs: Vec<Instr>,
    pub num_registers: usize,
    pub num_pis: usize,
    /// Gate count of the compiled graph (for the compression report).
    pub num_gates: usize,
}

impl InstrProgram {
    /// Registers per gate.
    pub fn compression_ratio(&self) -> f64 {
        if self.num_gates == 0 {
            0.0
        } else {
            self.num_registers as f64 / self.num_gates as f64
        }
    }

    /// One instruction per line followed by a summary line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for i in &self.instrs {
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s.push_str(&format!(
            "# gates={} instrs={} registers={} ratio={:.2}%\n",
            self.num_gates,
            self.instrs.len(),
            self.num_registers,
            100.0 * self.compression_ratio()
        ));
        s
    }
}

/// Compiles the single output of `xag` into a register program.
///
/// Gates are emitted in topological order. A PI is loaded right before its
/// first use. When a value's last use is reached its register is released
/// before the destination is allocated, so the destination can take the
/// register of its first operand.
pub fn compile_program(xag: &Xag) -> Result<InstrProgram, EsError> {
    if xag.outputs().len() != 1 {
        return Err(EsError::NotSingleOutput(xag.outputs().len()));
    }
    if xag.num_pis() > MAX_ES_PIS {
        return Err(EsError::TooManyInputs(xag.num_pis()));
    }
    // Fold constants and drop dead logic.
    let mut b = XagBuilder::new(xag.num_pis());
    let map = b.import(xag);
    let out = map[xag.output().node()].negate_if(xag.output().is_negated());
    let g = b.build(vec![out]);
    let out = g.output();

    let mut instrs = Vec::new();
    if out.is_const() {
        instrs.push(Instr {
            op: Op::Zero,
            dst: 0,
            src0: Src { reg: 0, neg: false },
            src1: Src { reg: 0, neg: false },
            pi: 0,
        });
        instrs.push(Instr {
            op: Op::Output,
            dst: 0,
            src0: Src {
                reg: 0,
                neg: out.is_negated(),
            },
            src1: Src { reg: 0, neg: false },
            pi: 0,
        });
        return Ok(InstrProgram {
            instrs,
            num_registers: 1,
            num_pis: g.num_pis(),
            num_gates: 0,
        });
    }

    let mut refs = g.fanout_counts();
    refs[out.node()] += 1;
    const NONE: u32 = u32::MAX;
    let mut reg = vec![NONE; g.num_nodes()];
    let mut free: Vec<u32> = Vec::new();
    let mut num_registers = 0u32;
    let mut alloc = |free: &mut Vec<u32>| -> u32 {
        free.pop().unwrap_or_else(|| {
            num_registers += 1;
            num_registers - 1
        })
    };

    if g.is_pi(out.node()) {
        let r = alloc(&mut free);
        reg[out.node()] = r;
        instrs.push(Instr {
            op: Op::LoadPi,
            dst: r,
            src0: Src { reg: 0, neg: false },
            src1: Src { reg: 0, neg: false },
            pi: (out.node() - 1) as u32,
        });
    }
    for node in g.gate_nodes() {
        let gate = *g.gate(node);
        for f in gate.fanins() {
            let n = f.node();
            if reg[n] == NONE {
                debug_assert!(g.is_pi(n));
                let r = alloc(&mut free);
                reg[n] = r;
                instrs.push(Instr {
                    op: Op::LoadPi,
                    dst: r,
                    src0: Src { reg: 0, neg: false },
                    src1: Src { reg: 0, neg: false },
                    pi: (n - 1) as u32,
                });
            }
        }
        let src = |l: Lit| Src {
            reg: reg[l.node()],
            neg: l.is_negated(),
        };
        let (s0, s1) = (src(gate.in0), src(gate.in1));
        // Release in1 first so the LIFO pool hands in0's register to dst.
        for f in [gate.in1, gate.in0] {
            let n = f.node();
            refs[n] -= 1;
            if refs[n] == 0 {
                free.push(reg[n]);
            }
        }
        let dst = alloc(&mut free);
        reg[node] = dst;
        instrs.push(Instr {
            op: match gate.kind {
                GateKind::And => Op::And,
                GateKind::Xor => Op::Xor,
            },
            dst,
            src0: s0,
            src1: s1,
            pi: 0,
        });
    }
    instrs.push(Instr {
        op: Op::Output,
        dst: 0,
        src0: Src {
            reg: reg[out.node()],
            neg: out.is_negated(),
        },
        src1: Src { reg: 0, neg: false },
        pi: 0,
    });
    Ok(InstrProgram {
        instrs,
        num_registers: num_registers as usize,
        num_pis: g.num_pis(),
        num_gates: g.num_gates(),
    })
}

#[inline]
fn mask(neg: bool) -> u64 {
    0u64.wrapping_sub(neg as u64)
}

/// Lane pattern of PI `i < 6` within one word.
const LANE_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Per-worker register file executing one 2^14-pattern batch at a time.
struct Machine<'p> {
    prog: &'p InstrProgram,
    regs: Vec<[u64; BATCH_WORDS]>,
    out: [u64; BATCH_WORDS],
}

impl<'p> Machine<'p> {
    fn new(prog: &'p InstrProgram) -> Machine<'p> {
        Machine {
            prog,
            regs: vec![[0u64; BATCH_WORDS]; prog.num_registers.max(1)],
            out: [0u64; BATCH_WORDS],
        }
    }

    /// Runs batch `batch`: PIs from 14 upward take the bits of `batch`.
    fn run(&mut self, batch: u64) {
        for ins in &self.prog.instrs {
            match ins.op {
                Op::LoadPi => {
                    let i = ins.pi as usize;
                    let d = &mut self.regs[ins.dst as usize];
                    if i < 6 {
                        d.fill(LANE_MASKS[i]);
                    } else if i < BATCH_BITS {
                        let bit = i - 6;
                        for (w, x) in d.iter_mut().enumerate() {
                            *x = mask((w >> bit) & 1 == 1);
                        }
                    } else {
                        d.fill(mask((batch >> (i - BATCH_BITS)) & 1 == 1));
                    }
                }
                Op::And | Op::Xor => {
                    let (m0, m1) = (mask(ins.src0.neg), mask(ins.src1.neg));
                    let a = &self.regs[ins.src0.reg as usize];
                    let b = &self.regs[ins.src1.reg as usize];
                    let mut t = [0u64; BATCH_WORDS];
                    if ins.op == Op::And {
                        for w in 0..BATCH_WORDS {
                            t[w] = (a[w] ^ m0) & (b[w] ^ m1);
                        }
                    } else {
                        let m = m0 ^ m1;
                        for w in 0..BATCH_WORDS {
                            t[w] = a[w] ^ b[w] ^ m;
                        }
                    }
                    self.regs[ins.dst as usize] = t;
                }
                Op::Zero => self.regs[ins.dst as usize] = [0u64; BATCH_WORDS],
                Op::Output => {
                    let m = mask(ins.src0.neg);
                    let a = &self.regs[ins.src0.reg as usize];
                    for w in 0..BATCH_WORDS {
                        self.out[w] = a[w] ^ m;
                    }
                }
            }
        }
    }

    /// First set output bit as a pattern index within the batch.
    fn first_hit(&self, words: usize) -> Option<u64> {
        self.out[..words]
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| (i as u64) * 64 + w.trailing_zeros() as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EsVerdict {
    ExhaustedZero,
    Counterexample,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EsResult {
    pub verdict: EsVerdict,
    pub witness: Option<Vec<bool>>,
    pub patterns_evaluated: u64,
    pub wall: Duration,
}

fn decode_pattern(index: u64, num_pis: usize) -> Vec<bool> {
    (0..num_pis).map(|i| (index >> i) & 1 == 1).collect()
}

/// Evaluates `prog` on every input pattern with `workers` threads.
///
/// Batches are grouped into at least `8 * workers` chunks (when there are
/// enough batches) handed out through an atomic counter. The first worker
/// to see a set output bit publishes the witness and everyone stops.
pub fn run_exhaustive(prog: &InstrProgram, workers: usize, budget: &Budget) -> EsResult {
    let start = Instant::now();
    let workers = workers.max(1);
    let n = prog.num_pis;
    let total_patterns: u64 = 1u64 << n;
    let (num_batches, words) = if n >= BATCH_BITS {
        (1u64 << (n - BATCH_BITS), BATCH_WORDS)
    } else {
        (1u64, (1usize << n).div_ceil(64))
    };
    let patterns_per_batch = total_patterns.min(1u64 << BATCH_BITS);
    let mut chunk_bits = 0u32;
    while (1u64 << chunk_bits) < 8 * workers as u64 && (1u64 << (chunk_bits + 1)) <= num_batches {
        chunk_bits += 1;
    }
    let num_chunks = 1u64 << chunk_bits;
    let batches_per_chunk = num_batches / num_chunks;

    let next_chunk = AtomicUsize::new(0);
    let evaluated = AtomicU64::new(0);
    let witness: OnceLock<u64> = OnceLock::new();
    let stop_reason: OnceLock<UnknownReason> = OnceLock::new();

    let work = || {
        let mut m = Machine::new(prog);
        loop {
            if witness.get().is_some() || stop_reason.get().is_some() {
                return;
            }
            let c = next_chunk.fetch_add(1, Ordering::Relaxed) as u64;
            if c >= num_chunks {
                return;
            }
            for k in 0..batches_per_chunk {
                if witness.get().is_some() {
                    return;
                }
                if let Some(why) = budget.stop_reason() {
                    let _ = stop_reason.set(why);
                    return;
                }
                let batch = c * batches_per_chunk + k;
                m.run(batch);
                evaluated.fetch_add(patterns_per_batch, Ordering::Relaxed);
                if let Some(hit) = m.first_hit(words) {
                    let _ = witness.set((batch << BATCH_BITS) | hit);
                    return;
                }
            }
        }
    };
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }

    let patterns_evaluated = evaluated.load(Ordering::Relaxed);
    let (verdict, witness) = match witness.get() {
        Some(&idx) => (EsVerdict::Counterexample, Some(decode_pattern(idx, n))),
        None if stop_reason.get().is_some() => (EsVerdict::BudgetExceeded, None),
        None => (EsVerdict::ExhaustedZero, None),
    };
    EsResult {
        verdict,
        witness,
        patterns_evaluated,
        wall: start.elapsed(),
    }
}

/// Exhaustive check that the output of `xag` is constant zero.
pub fn es_check(xag: &Xag, workers: usize, budget: &Budget) -> CheckResult {
    let prog = match compile_program(xag) {
        Ok(p) => p,
        Err(_) => return CheckResult::Unknown(UnknownReason::Ineligible),
    };
    let r = run_exhaustive(&prog, workers, budget);
    match r.verdict {
        EsVerdict::ExhaustedZero => CheckResult::Equivalent,
        EsVerdict::Counterexample => {
            let w = r.witness.expect("witness present with counterexample");
            assert!(
                verify_witness(xag, &w),
                "exhaustive-simulation witness does not verify"
            );
            CheckResult::Counterexample(w)
        }
        EsVerdict::BudgetExceeded => {
            CheckResult::Unknown(budget.stop_reason().unwrap_or(UnknownReason::Timeout))
        }
    }
}

/// Replays the register schedule of `prog` and reports the first misuse:
/// reading an unwritten or released register, or a bad release count.
pub fn check_register_safety(prog: &InstrProgram) -> Result<(), String> {
    let r = prog.num_registers;
    let mut live = vec![false; r];
    // Last read of each value decides when it is released; recompute it.
    let mut last_read: Vec<Option<usize>> = vec![None; prog.instrs.len()];
    let mut writer: Vec<Option<usize>> = vec![None; r];
    for (k, ins) in prog.instrs.iter().enumerate() {
        let reads: Vec<Src> = match ins.op {
            Op::And | Op::Xor => vec![ins.src0, ins.src1],
            Op::Output => vec![ins.src0],
            _ => Vec::new(),
        };
        for s in &reads {
            let reg = s.reg as usize;
            if reg >= r || !live[reg] {
                return Err(format!("instr {k} reads dead register r{reg}"));
            }
            if let Some(w) = writer[reg] {
                last_read[w] = Some(k);
            }
        }
        if ins.op != Op::Output {
            let d = ins.dst as usize;
            if d >= r {
                return Err(format!("instr {k} writes r{d} beyond the register file"));
            }
            live[d] = true;
            writer[d] = Some(k);
        }
    }
    // A value is released after its last read; its register must not be
    // written again before that read.
    let mut owner: Vec<Option<usize>> = vec![None; r];
    for (k, ins) in prog.instrs.iter().enumerate() {
        if ins.op == Op::Output {
            continue;
        }
        let d = ins.dst as usize;
        if let Some(prev) = owner[d] {
            let reads = [ins.src0, ins.src1];
            let read_here =
                matches!(ins.op, Op::And | Op::Xor) && reads.iter().any(|s| s.reg as usize == d);
            match last_read[prev] {
                Some(lr) if lr > k || (lr == k && !read_here) => {
                    return Err(format!(
                        "instr {k} overwrites r{d} while its value is still needed"
                    ));
                }
                _ => {}
            }
        }
        owner[d] = Some(k);
    }
    Ok(())
}
