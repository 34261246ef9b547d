// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum XagError {
    #[error("node {node} references fanin {fanin} that does not precede it")]
    NotTopological { node: usize, fanin: usize },
    #[error("interface mismatch: {a_pis}/{a_pos} vs {b_pis}/{b_pos} (inputs/outputs)")]
    InterfaceMismatch {
        a_pis: usize,
        a_pos: usize,
        b_pis: usize,
        b_pos: usize,
    },
    #[error("multiplier width {0} outside 2..=32")]
    WidthOutOfRange(usize),
    #[error("cube assigns node {0} both polarities")]
    ContradictoryCube(usize),
    #[error("cube literal references node {0} outside the graph")]
    CubeOutOfRange(usize),
    #[error("expected a single-output graph, found {0} outputs")]
    NotSingleOutput(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AigerError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("latches are not supported ({0} declared)")]
    LatchesUnsupported(usize),
    #[error("literal {literal} exceeds the declared maximum variable {max_var}")]
    DanglingLiteral { literal: u32, max_var: u32 },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("combinational cycle through variable {0}")]
    Cycle(u32),
}
