//! Word-level dataflow designs: a small expression IR over fixed-width
//! unsigned words, a reference interpreter, key-based obfuscation of
//! constants/operations/branches, and lowering to gate-level [`Netlist`]s.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::PortRole;

mod json;
mod lock;
mod lower;

pub use json::{key_to_json, parse_word_json, word_to_json, WordJsonError};
pub use lock::{assure_lock, AssureKey, AssureMode, KeySegment, LockError, SegmentKind};
pub use lower::{lower_to_gates, LowerError};

/// Index of an expression node in a [`WordDesign`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExprId(pub u32);

impl ExprId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Two-operand word operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    BitXor,
    BitAnd,
    BitOr,
}

/// Unsigned comparison operators; result width is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Gt,
    Le,
    Eq,
}

/// One node of the expression DAG. Operand ids always point at earlier
/// arena slots, so any well-formed design is acyclic by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordExpr {
    Const { width: u32, value: u64 },
    /// Reference to a declared input, by index into [`WordDesign::inputs`].
    Input(usize),
    Bin { op: BinOp, a: ExprId, b: ExprId },
    Cmp { op: CmpOp, a: ExprId, b: ExprId },
    /// `cond` must be 1 bit wide; selects `then_` when 1, `else_` when 0.
    Mux { cond: ExprId, then_: ExprId, else_: ExprId },
}

/// A declared word-level input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordInput {
    pub name: String,
    pub width: u32,
    pub role: PortRole,
}

/// A word-level design: inputs, an expression arena, and named outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordDesign {
    pub inputs: Vec<WordInput>,
    pub nodes: Vec<WordExpr>,
    pub outputs: Vec<(String, ExprId)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("node {0} references a later or missing node {1}")]
    ForwardReference(usize, usize),
    #[error("node {0} references undeclared input index {1}")]
    UnknownInput(usize, usize),
    #[error("node {node}: operand widths differ ({a} vs {b})")]
    WidthMismatch { node: usize, a: u32, b: u32 },
    #[error("node {0}: mux condition is {1} bits wide, expected 1")]
    BadCondWidth(usize, u32),
    #[error("node {0}: width 0 is not allowed")]
    ZeroWidth(usize),
    #[error("input {0:?} declared with width 0")]
    ZeroWidthInput(String),
    #[error("input {0:?} has width {1} > 64")]
    WidthTooLarge(String, u32),
    #[error("node {0}: constant value {1:#x} does not fit in {2} bits")]
    ConstOverflow(usize, u64, u32),
    #[error("output {0:?} references missing node {1}")]
    BadOutput(String, usize),
    #[error("duplicate input name {0:?}")]
    DuplicateInput(String),
    #[error("design has no outputs")]
    NoOutputs,
    #[error("missing value for input {0:?}")]
    MissingValue(String),
}

/// All-ones value of the given width.
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl WordDesign {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_input(&mut self, name: impl Into<String>, width: u32, role: PortRole) -> ExprId {
        self.inputs.push(WordInput { name: name.into(), width, role });
        self.push(WordExpr::Input(self.inputs.len() - 1))
    }

    pub fn push(&mut self, node: WordExpr) -> ExprId {
        self.nodes.push(node);
        ExprId((self.nodes.len() - 1) as u32)
    }

    pub fn constant(&mut self, width: u32, value: u64) -> ExprId {
        self.push(WordExpr::Const { width, value })
    }

    pub fn bin(&mut self, op: BinOp, a: ExprId, b: ExprId) -> ExprId {
        self.push(WordExpr::Bin { op, a, b })
    }

    pub fn cmp(&mut self, op: CmpOp, a: ExprId, b: ExprId) -> ExprId {
        self.push(WordExpr::Cmp { op, a, b })
    }

    pub fn mux(&mut self, cond: ExprId, then_: ExprId, else_: ExprId) -> ExprId {
        self.push(WordExpr::Mux { cond, then_, else_ })
    }

    pub fn output(&mut self, name: impl Into<String>, node: ExprId) {
        self.outputs.push((name.into(), node));
    }

    /// Width of a node, assuming the design validates.
    pub fn width(&self, id: ExprId) -> u32 {
        match &self.nodes[id.index()] {
            WordExpr::Const { width, .. } => *width,
            WordExpr::Input(i) => self.inputs[*i].width,
            WordExpr::Bin { a, .. } => self.width(*a),
            WordExpr::Cmp { .. } => 1,
            WordExpr::Mux { then_, .. } => self.width(*then_),
        }
    }

    pub fn validate(&self) -> Result<(), WordError> {
        let mut seen = HashMap::new();
        for inp in &self.inputs {
            if inp.width == 0 {
                return Err(WordError::ZeroWidthInput(inp.name.clone()));
            }
            if inp.width > 64 {
                return Err(WordError::WidthTooLarge(inp.name.clone(), inp.width));
            }
            if seen.insert(inp.name.clone(), ()).is_some() {
                return Err(WordError::DuplicateInput(inp.name.clone()));
            }
        }
        // widths[i] is filled once node i checks out; forward refs can't
        // have a width yet, which is exactly the acyclicity argument.
        let mut widths: Vec<u32> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let operand = |id: ExprId| -> Result<u32, WordError> {
                widths
                    .get(id.index())
                    .copied()
                    .ok_or(WordError::ForwardReference(i, id.index()))
            };
            let w = match node {
                WordExpr::Const { width, value } => {
                    if *width == 0 {
                        return Err(WordError::ZeroWidth(i));
                    }
                    if *width > 64 {
                        return Err(WordError::WidthTooLarge(format!("node {i}"), *width));
                    }
                    if *value & !mask(*width) != 0 {
                        return Err(WordError::ConstOverflow(i, *value, *width));
                    }
                    *width
                }
                WordExpr::Input(idx) => self
                    .inputs
                    .get(*idx)
                    .map(|inp| inp.width)
                    .ok_or(WordError::UnknownInput(i, *idx))?,
                WordExpr::Bin { a, b, .. } | WordExpr::Cmp { a, b, .. } => {
                    let (wa, wb) = (operand(*a)?, operand(*b)?);
                    if wa != wb {
                        return Err(WordError::WidthMismatch { node: i, a: wa, b: wb });
                    }
                    if matches!(node, WordExpr::Cmp { .. }) {
                        1
                    } else {
                        wa
                    }
                }
                WordExpr::Mux { cond, then_, else_ } => {
                    let wc = operand(*cond)?;
                    if wc != 1 {
                        return Err(WordError::BadCondWidth(i, wc));
                    }
                    let (wt, we) = (operand(*then_)?, operand(*else_)?);
                    if wt != we {
                        return Err(WordError::WidthMismatch { node: i, a: wt, b: we });
                    }
                    wt
                }
            };
            widths.push(w);
        }
        if self.outputs.is_empty() {
            return Err(WordError::NoOutputs);
        }
        for (name, id) in &self.outputs {
            if id.index() >= self.nodes.len() {
                return Err(WordError::BadOutput(name.clone(), id.index()));
            }
        }
        Ok(())
    }
}

/// Evaluate a design on one full input assignment. Arithmetic is modulo
/// 2^width; comparisons are unsigned.
pub fn word_eval(
    design: &WordDesign,
    assignment: &HashMap<String, u64>,
) -> Result<Vec<(String, u64)>, WordError> {
    design.validate()?;
    let mut input_vals = Vec::with_capacity(design.inputs.len());
    for inp in &design.inputs {
        let v = assignment
            .get(&inp.name)
            .copied()
            .ok_or_else(|| WordError::MissingValue(inp.name.clone()))?;
        input_vals.push(v & mask(inp.width));
    }
    let mut vals: Vec<u64> = Vec::with_capacity(design.nodes.len());
    for node in &design.nodes {
        let v = match node {
            WordExpr::Const { value, .. } => *value,
            WordExpr::Input(i) => input_vals[*i],
            WordExpr::Bin { op, a, b } => {
                let w = design.width(*a);
                let (x, y) = (vals[a.index()], vals[b.index()]);
                let r = match op {
                    BinOp::Add => x.wrapping_add(y),
                    BinOp::Sub => x.wrapping_sub(y),
                    BinOp::BitXor => x ^ y,
                    BinOp::BitAnd => x & y,
                    BinOp::BitOr => x | y,
                };
                r & mask(w)
            }
            WordExpr::Cmp { op, a, b } => {
                let (x, y) = (vals[a.index()], vals[b.index()]);
                let r = match op {
                    CmpOp::Gt => x > y,
                    CmpOp::Le => x <= y,
                    CmpOp::Eq => x == y,
                };
                r as u64
            }
            WordExpr::Mux { cond, then_, else_ } => {
                if vals[cond.index()] == 1 {
                    vals[then_.index()]
                } else {
                    vals[else_.index()]
                }
            }
        };
        vals.push(v);
    }
    Ok(design
        .outputs
        .iter()
        .map(|(name, id)| (name.clone(), vals[id.index()]))
        .collect())
}
