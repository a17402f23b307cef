//! JSON serialization for word designs and assembled keys.
//!
//! ```json
//! {
//!   "inputs":  [{"name": "a", "width": 4, "role": "operational"}],
//!   "nodes":   [{"op": "const", "width": 4, "value": 13},
//!               {"op": "add", "a": 1, "b": 0}],
//!   "outputs": [{"name": "b", "node": 2}]
//! }
//! ```
//!
//! Node operands are indices into `nodes` and must point backwards.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AssureKey, BinOp, CmpOp, ExprId, WordDesign, WordError, WordExpr, WordInput};

#[derive(Debug, Error)]
pub enum WordJsonError {
    #[error("malformed word-design JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid word design: {0}")]
    Invalid(#[from] WordError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDesign {
    inputs: Vec<WordInput>,
    nodes: Vec<JsonNode>,
    outputs: Vec<JsonOutput>,
}

#[derive(Serialize, Deserialize)]
struct JsonOutput {
    name: String,
    node: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum JsonNode {
    Const { width: u32, value: u64 },
    Input { input: usize },
    Add { a: u32, b: u32 },
    Sub { a: u32, b: u32 },
    Xor { a: u32, b: u32 },
    And { a: u32, b: u32 },
    Or { a: u32, b: u32 },
    Gt { a: u32, b: u32 },
    Le { a: u32, b: u32 },
    Eq { a: u32, b: u32 },
    Mux {
        cond: u32,
        then: u32,
        #[serde(rename = "else")]
        else_: u32,
    },
}

impl From<&WordExpr> for JsonNode {
    fn from(e: &WordExpr) -> Self {
        match *e {
            WordExpr::Const { width, value } => JsonNode::Const { width, value },
            WordExpr::Input(i) => JsonNode::Input { input: i },
            WordExpr::Bin { op, a, b } => {
                let (a, b) = (a.0, b.0);
                match op {
                    BinOp::Add => JsonNode::Add { a, b },
                    BinOp::Sub => JsonNode::Sub { a, b },
                    BinOp::BitXor => JsonNode::Xor { a, b },
                    BinOp::BitAnd => JsonNode::And { a, b },
                    BinOp::BitOr => JsonNode::Or { a, b },
                }
            }
            WordExpr::Cmp { op, a, b } => {
                let (a, b) = (a.0, b.0);
                match op {
                    CmpOp::Gt => JsonNode::Gt { a, b },
                    CmpOp::Le => JsonNode::Le { a, b },
                    CmpOp::Eq => JsonNode::Eq { a, b },
                }
            }
            WordExpr::Mux { cond, then_, else_ } => {
                JsonNode::Mux { cond: cond.0, then: then_.0, else_: else_.0 }
            }
        }
    }
}

impl From<&JsonNode> for WordExpr {
    fn from(n: &JsonNode) -> Self {
        let bin = |op, a: u32, b: u32| WordExpr::Bin { op, a: ExprId(a), b: ExprId(b) };
        let cmp = |op, a: u32, b: u32| WordExpr::Cmp { op, a: ExprId(a), b: ExprId(b) };
        match *n {
            JsonNode::Const { width, value } => WordExpr::Const { width, value },
            JsonNode::Input { input } => WordExpr::Input(input),
            JsonNode::Add { a, b } => bin(BinOp::Add, a, b),
            JsonNode::Sub { a, b } => bin(BinOp::Sub, a, b),
            JsonNode::Xor { a, b } => bin(BinOp::BitXor, a, b),
            JsonNode::And { a, b } => bin(BinOp::BitAnd, a, b),
            JsonNode::Or { a, b } => bin(BinOp::BitOr, a, b),
            JsonNode::Gt { a, b } => cmp(CmpOp::Gt, a, b),
            JsonNode::Le { a, b } => cmp(CmpOp::Le, a, b),
            JsonNode::Eq { a, b } => cmp(CmpOp::Eq, a, b),
            JsonNode::Mux { cond, then, else_ } => WordExpr::Mux {
                cond: ExprId(cond),
                then_: ExprId(then),
                else_: ExprId(else_),
            },
        }
    }
}

pub fn word_to_json(design: &WordDesign) -> String {
    let doc = JsonDesign {
        inputs: design.inputs.clone(),
        nodes: design.nodes.iter().map(JsonNode::from).collect(),
        outputs: design
            .outputs
            .iter()
            .map(|(name, id)| JsonOutput { name: name.clone(), node: id.0 })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn parse_word_json(bytes: &[u8]) -> Result<WordDesign, WordJsonError> {
    let doc: JsonDesign = serde_json::from_slice(bytes)?;
    let design = WordDesign {
        inputs: doc.inputs,
        nodes: doc.nodes.iter().map(WordExpr::from).collect(),
        outputs: doc
            .outputs
            .into_iter()
            .map(|o| (o.name, ExprId(o.node)))
            .collect(),
    };
    design.validate()?;
    Ok(design)
}

#[derive(Serialize, Deserialize)]
struct JsonKey {
    key: String,
    segments: Vec<super::KeySegment>,
}

/// Serialize an assembled key as `{"key": "0101...", "segments": [...]}`.
pub fn key_to_json(key: &AssureKey) -> String {
    let doc = JsonKey { key: key.bit_string(), segments: key.segments.clone() };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}
