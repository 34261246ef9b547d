// SPDX-License-Identifier: Apache-2.0

//! AIGER reader (ASCII `aag` and binary `aig`, combinational subset) and
//! ASCII writer.
//!
//! Reference: <https://fmv.jku.at/aiger/FORMAT>

use crate::error::AigerError;
use crate::xag::{Gate, GateKind, Lit, Xag};

struct Header {
    binary: bool,
    max_var: u32,
    inputs: usize,
    outputs: usize,
    ands: usize,
}

fn parse_header(line: &str) -> Result<Header, AigerError> {
    let mut parts = line.split_ascii_whitespace();
    let binary = match parts.next() {
        Some("aag") => false,
        Some("aig") => true,
        other => {
            return Err(AigerError::MalformedHeader(format!(
                "expected 'aag' or 'aig', found {:?}",
                other.unwrap_or("")
            )))
        }
    };
    let nums: Vec<u64> = parts
        .map(|p| p.parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|e| AigerError::MalformedHeader(e.to_string()))?;
    if nums.len() < 5 {
        return Err(AigerError::MalformedHeader(format!(
            "expected at least 5 counts, found {}",
            nums.len()
        )));
    }
    if nums.len() > 9 {
        return Err(AigerError::MalformedHeader("too many header fields".into()));
    }
    if nums[5..].iter().any(|&n| n != 0) {
        return Err(AigerError::MalformedHeader(
            "bad-state, constraint, justice and fairness sections are not supported".into(),
        ));
    }
    if nums[0] > (u32::MAX >> 2) as u64 {
        return Err(AigerError::MalformedHeader(
            "maximum variable index too large".into(),
        ));
    }
    if nums[2] != 0 {
        return Err(AigerError::LatchesUnsupported(nums[2] as usize));
    }
    let h = Header {
        binary,
        max_var: nums[0] as u32,
        inputs: nums[1] as usize,
        outputs: nums[3] as usize,
        ands: nums[4] as usize,
    };
    if (h.inputs + h.ands) as u64 > nums[0] {
        return Err(AigerError::MalformedHeader(format!(
            "M = {} is smaller than I + A = {}",
            nums[0],
            h.inputs + h.ands
        )));
    }
    if binary && (h.inputs + h.ands) as u64 != nums[0] {
        return Err(AigerError::MalformedHeader(
            "binary format requires M = I + L + A".into(),
        ));
    }
    Ok(h)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn next_line(&mut self) -> Result<&'a str, AigerError> {
        if self.pos >= self.data.len() {
            return Err(AigerError::UnexpectedEof);
        }
        let start = self.pos;
        let end = self.data[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(self.data.len(), |p| start + p);
        self.pos = end + 1;
        self.line += 1;
        std::str::from_utf8(&self.data[start..end])
            .map(|s| s.trim_end_matches('\r'))
            .map_err(|_| AigerError::Syntax {
                line: self.line,
                msg: "invalid UTF-8".into(),
            })
    }

    fn numbers(&mut self, expected: usize) -> Result<Vec<u32>, AigerError> {
        let line_no = self.line + 1;
        let line = self.next_line()?;
        let nums: Vec<u32> = line
            .split_ascii_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|e| AigerError::Syntax {
                line: line_no,
                msg: e.to_string(),
            })?;
        if nums.len() != expected {
            return Err(AigerError::Syntax {
                line: line_no,
                msg: format!("expected {expected} numbers, found {}", nums.len()),
            });
        }
        Ok(nums)
    }

    fn varint(&mut self) -> Result<u32, AigerError> {
        let mut x: u64 = 0;
        let mut shift = 0;
        loop {
            let &b = self.data.get(self.pos).ok_or(AigerError::UnexpectedEof)?;
            self.pos += 1;
            x |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                break;
            }
            shift += 7;
            if shift > 35 {
                return Err(AigerError::Syntax {
                    line: self.line,
                    msg: "binary delta overflow".into(),
                });
            }
        }
        u32::try_from(x).map_err(|_| AigerError::Syntax {
            line: self.line,
            msg: "binary delta overflow".into(),
        })
    }
}

#[derive(Clone, Copy)]
enum Def {
    Undefined,
    Input,
    And(u32, u32),
}

/// Parses an ASCII or binary AIGER file into an AND-only [`Xag`].
///
/// Inputs keep their declaration order; AND gates are emitted in a
/// topological order of their definitions.
pub fn parse_aiger(bytes: &[u8]) -> Result<Xag, AigerError> {
    let mut cur = Cursor {
        data: bytes,
        pos: 0,
        line: 0,
    };
    let h = parse_header(cur.next_line()?)?;
    let m = h.max_var;
    let check = |lit: u32| {
        if lit >> 1 > m {
            Err(AigerError::DanglingLiteral {
                literal: lit,
                max_var: m,
            })
        } else {
            Ok(lit)
        }
    };
    let mut defs = vec![Def::Undefined; m as usize + 1];
    let mut input_vars = Vec::with_capacity(h.inputs);
    let mut outputs = Vec::with_capacity(h.outputs);
    let mut and_vars = Vec::with_capacity(h.ands);

    if h.binary {
        for i in 0..h.inputs {
            let var = i as u32 + 1;
            defs[var as usize] = Def::Input;
            input_vars.push(var);
        }
        for _ in 0..h.outputs {
            outputs.push(check(cur.numbers(1)?[0])?);
        }
        for i in 0..h.ands {
            let lhs = 2 * (h.inputs + i + 1) as u32;
            let d0 = cur.varint()?;
            let d1 = cur.varint()?;
            let rhs0 = lhs.checked_sub(d0).ok_or(AigerError::Syntax {
                line: cur.line,
                msg: "negative rhs0".into(),
            })?;
            let rhs1 = rhs0.checked_sub(d1).ok_or(AigerError::Syntax {
                line: cur.line,
                msg: "negative rhs1".into(),
            })?;
            defs[(lhs >> 1) as usize] = Def::And(rhs0, rhs1);
            and_vars.push(lhs >> 1);
        }
    } else {
        for _ in 0..h.inputs {
            let line = cur.line + 1;
            let lit = check(cur.numbers(1)?[0])?;
            if lit & 1 == 1 || lit < 2 {
                return Err(AigerError::Syntax {
                    line,
                    msg: format!("invalid input literal {lit}"),
                });
            }
            let var = lit >> 1;
            if !matches!(defs[var as usize], Def::Undefined) {
                return Err(AigerError::Syntax {
                    line,
                    msg: format!("variable {var} defined twice"),
                });
            }
            defs[var as usize] = Def::Input;
            input_vars.push(var);
        }
        for _ in 0..h.outputs {
            outputs.push(check(cur.numbers(1)?[0])?);
        }
        for _ in 0..h.ands {
            let line = cur.line + 1;
            let n = cur.numbers(3)?;
            let (lhs, r0, r1) = (check(n[0])?, check(n[1])?, check(n[2])?);
            if lhs & 1 == 1 || lhs < 2 {
                return Err(AigerError::Syntax {
                    line,
                    msg: format!("invalid AND output literal {lhs}"),
                });
            }
            let var = lhs >> 1;
            if !matches!(defs[var as usize], Def::Undefined) {
                return Err(AigerError::Syntax {
                    line,
                    msg: format!("variable {var} defined twice"),
                });
            }
            defs[var as usize] = Def::And(r0, r1);
            and_vars.push(var);
        }
    }

    // Topological order over AND definitions (ASCII files may list them in any order).
    let num_pis = h.inputs;
    let mut node_of = vec![u32::MAX; m as usize + 1];
    node_of[0] = 0;
    for (i, &v) in input_vars.iter().enumerate() {
        node_of[v as usize] = i as u32 + 1;
    }
    let mut gates: Vec<Gate> = Vec::with_capacity(h.ands);
    let mut state = vec![0u8; m as usize + 1]; // 0 new, 1 on stack, 2 done
    let undefined = |lit: u32| AigerError::Syntax {
        line: 0,
        msg: format!("literal {lit} references an undefined variable"),
    };
    for &root in &and_vars {
        if state[root as usize] == 2 {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((var, expanded)) = stack.pop() {
            let vi = var as usize;
            if expanded {
                let Def::And(r0, r1) = defs[vi] else {
                    unreachable!()
                };
                let lit = |l: u32| Lit::new(node_of[(l >> 1) as usize] as usize, l & 1 == 1);
                let node = 1 + num_pis + gates.len();
                gates.push(Gate {
                    kind: GateKind::And,
                    in0: lit(r0),
                    in1: lit(r1),
                });
                node_of[vi] = node as u32;
                state[vi] = 2;
                continue;
            }
            if state[vi] == 2 {
                continue;
            }
            if state[vi] == 1 {
                return Err(AigerError::Cycle(var));
            }
            state[vi] = 1;
            stack.push((var, true));
            let Def::And(r0, r1) = defs[vi] else {
                unreachable!()
            };
            for r in [r1, r0] {
                let rv = (r >> 1) as usize;
                match defs[rv] {
                    Def::And(..) => {
                        if state[rv] == 1 {
                            return Err(AigerError::Cycle(r >> 1));
                        }
                        if state[rv] == 0 {
                            stack.push((r >> 1, false));
                        }
                    }
                    Def::Input => {}
                    Def::Undefined if rv == 0 => {}
                    Def::Undefined => return Err(undefined(r)),
                }
            }
        }
    }
    let mut outs = Vec::with_capacity(outputs.len());
    for o in outputs {
        let v = (o >> 1) as usize;
        if v != 0 && matches!(defs[v], Def::Undefined) {
            return Err(undefined(o));
        }
        outs.push(Lit::new(node_of[v] as usize, o & 1 == 1));
    }
    Ok(Xag::from_parts(num_pis, gates, outs).expect("topological order by construction"))
}

/// Writes `xag` as ASCII AIGER. XOR gates are expanded into three ANDs
/// in the shape recognized by [`crate::xor_detect::detect_xors`].
pub fn write_aag(xag: &Xag) -> String {
    let mut lines = Vec::new();
    let mut lit_of = vec![0u32; xag.num_nodes()];
    let mut next_var = xag.num_pis() as u32 + 1;
    for i in 0..xag.num_pis() {
        lit_of[i + 1] = 2 * (i as u32 + 1);
    }
    let map = |lit_of: &[u32], l: Lit| lit_of[l.node()] ^ l.is_negated() as u32;
    let mut ands = Vec::new();
    for node in xag.gate_nodes() {
        let g = xag.gate(node);
        let (a, b) = (map(&lit_of, g.in0), map(&lit_of, g.in1));
        match g.kind {
            GateKind::And => {
                let lhs = 2 * next_var;
                next_var += 1;
                ands.push((lhs, a, b));
                lit_of[node] = lhs;
            }
            GateKind::Xor => {
                let x = 2 * next_var;
                let y = 2 * (next_var + 1);
                let z = 2 * (next_var + 2);
                next_var += 3;
                ands.push((x, a, b ^ 1));
                ands.push((y, a ^ 1, b));
                ands.push((z, x ^ 1, y ^ 1));
                lit_of[node] = z ^ 1;
            }
        }
    }
    lines.push(format!(
        "aag {} {} 0 {} {}",
        next_var - 1,
        xag.num_pis(),
        xag.outputs().len(),
        ands.len()
    ));
    for i in 0..xag.num_pis() {
        lines.push(format!("{}", 2 * (i + 1)));
    }
    for o in xag.outputs() {
        lines.push(format!("{}", map(&lit_of, *o)));
    }
    for (l, a, b) in ands {
        lines.push(format!("{l} {a} {b}"));
    }
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
