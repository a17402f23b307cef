//! Canonical JSON schema for netlists. All nets are referenced by name;
//! unnamed nets are assigned `n<id>` labels on emit. Unknown fields are
//! rejected.

use super::{Dff, DffInit, Gate, GateKind, NetId, Netlist, PortBit, PortRole};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unknown gate kind {0:?}")]
    UnknownKind(String),
    #[error("unknown net name {0:?} referenced by {1}")]
    UnknownNet(String, String),
    #[error("invalid dff init {0:?} (expected 0, 1, or \"x\")")]
    BadInit(String),
    #[error("netlist invalid: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInput {
    name: String,
    role: PortRole,
    bit: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGate {
    kind: String,
    #[serde(rename = "in")]
    inputs: Vec<String>,
    out: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDff {
    d: String,
    q: String,
    init: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonNetlist {
    inputs: Vec<JsonInput>,
    outputs: Vec<String>,
    gates: Vec<JsonGate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dffs: Vec<JsonDff>,
}

fn kind_from_str(s: &str) -> Option<GateKind> {
    Some(match s {
        "AND" => GateKind::And,
        "NAND" => GateKind::Nand,
        "OR" => GateKind::Or,
        "NOR" => GateKind::Nor,
        "XOR" => GateKind::Xor,
        "XNOR" => GateKind::Xnor,
        "NOT" => GateKind::Not,
        "BUF" => GateKind::Buf,
        "MUX2" => GateKind::Mux2,
        "CONST0" => GateKind::Const0,
        "CONST1" => GateKind::Const1,
        _ => return None,
    })
}

fn init_to_json(init: DffInit) -> serde_json::Value {
    match init {
        DffInit::Zero => serde_json::json!(0),
        DffInit::One => serde_json::json!(1),
        DffInit::X => serde_json::json!("x"),
    }
}

fn init_from_json(v: &serde_json::Value) -> Result<DffInit, JsonError> {
    match v {
        serde_json::Value::Number(n) if n.as_u64() == Some(0) => Ok(DffInit::Zero),
        serde_json::Value::Number(n) if n.as_u64() == Some(1) => Ok(DffInit::One),
        serde_json::Value::String(s) if s == "x" || s == "X" => Ok(DffInit::X),
        other => Err(JsonError::BadInit(other.to_string())),
    }
}

/// Build the JSON document for a netlist (canonical field order).
pub(crate) fn to_json_value(netlist: &Netlist) -> serde_json::Value {
    let label = |n: NetId| netlist.net_label(n);
    let doc = JsonNetlist {
        inputs: netlist
            .inputs
            .iter()
            .map(|p| JsonInput { name: p.name.clone(), role: p.role, bit: p.bit })
            .collect(),
        outputs: netlist.outputs.iter().map(|&o| label(o)).collect(),
        gates: netlist
            .gates
            .iter()
            .map(|g| JsonGate {
                kind: g.kind.name().to_string(),
                inputs: g.inputs.iter().map(|&i| label(i)).collect(),
                out: label(g.output),
            })
            .collect(),
        dffs: netlist
            .dffs
            .iter()
            .map(|d| JsonDff { d: label(d.d), q: label(d.q), init: init_to_json(d.init) })
            .collect(),
    };
    serde_json::to_value(doc).expect("netlist serialization cannot fail")
}

/// Serialize a netlist to canonical JSON bytes.
pub fn emit_json(netlist: &Netlist) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&to_json_value(netlist)).expect("serialization");
    bytes.push(b'\n');
    bytes
}

pub(crate) fn from_json_value(doc: serde_json::Value) -> Result<Netlist, JsonError> {
    let doc: JsonNetlist = serde_json::from_value(doc)?;
    let mut netlist = Netlist::new();
    let mut by_name: HashMap<String, NetId> = HashMap::new();
    let intern = |name: &str, netlist: &mut Netlist, by_name: &mut HashMap<String, NetId>| {
        if let Some(&id) = by_name.get(name) {
            id
        } else {
            let id = netlist.fresh_named_net(name);
            by_name.insert(name.to_string(), id);
            id
        }
    };

    for inp in &doc.inputs {
        let net = intern(&inp.name, &mut netlist, &mut by_name);
        netlist.inputs.push(PortBit { net, name: inp.name.clone(), role: inp.role, bit: inp.bit });
    }
    for g in &doc.gates {
        let kind = kind_from_str(&g.kind).ok_or_else(|| JsonError::UnknownKind(g.kind.clone()))?;
        let inputs = g
            .inputs
            .iter()
            .map(|n| intern(n, &mut netlist, &mut by_name))
            .collect();
        let output = intern(&g.out, &mut netlist, &mut by_name);
        netlist.gates.push(Gate { kind, inputs, output });
    }
    for d in &doc.dffs {
        let dn = intern(&d.d, &mut netlist, &mut by_name);
        let qn = intern(&d.q, &mut netlist, &mut by_name);
        netlist.dffs.push(Dff { d: dn, q: qn, init: init_from_json(&d.init)? });
    }
    for o in &doc.outputs {
        let net = by_name
            .get(o.as_str())
            .copied()
            .ok_or_else(|| JsonError::UnknownNet(o.clone(), "outputs".into()))?;
        netlist.outputs.push(net);
    }

    let violations = netlist.validate();
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(JsonError::Invalid(msgs.join("; ")));
    }
    Ok(netlist)
}

/// Parse a netlist from JSON bytes, rejecting invalid netlists.
pub fn parse_json(bytes: &[u8]) -> Result<Netlist, JsonError> {
    let doc: serde_json::Value = serde_json::from_slice(bytes)?;
    from_json_value(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::GateKind;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_buf_circuit_parses() {
        let src = br#"{
            "inputs": [{"name":"a","role":"operational","bit":0}],
            "outputs": ["o"],
            "gates": [{"kind":"BUF","in":["a"],"out":"o"}]
        }"#;
        let n = parse_json(src).unwrap();
        assert_eq!(n.gates.len(), 1);
        assert_eq!(n.gates[0].kind, GateKind::Buf);
    }

    #[test]
    fn unknown_field_rejected() {
        let src = br#"{
            "inputs": [{"name":"a","role":"operational","bit":0,"width":4}],
            "outputs": ["a"],
            "gates": []
        }"#;
        assert!(parse_json(src).is_err());
    }

    #[test]
    fn roundtrip_is_identity_on_canonical_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let mut n = Netlist::new();
            let mut nets = vec![
                n.add_input("a", PortRole::Operational, 0),
                n.add_input("k", PortRole::Secret, 0),
            ];
            for _ in 0..rng.gen_range(1..12) {
                let kind = *[
                    GateKind::And,
                    GateKind::Or,
                    GateKind::Xor,
                    GateKind::Nand,
                    GateKind::Not,
                ]
                .choose(&mut rng)
                .unwrap();
                let ins: Vec<NetId> =
                    (0..kind.arity()).map(|_| *nets.choose(&mut rng).unwrap()).collect();
                nets.push(n.add_gate(kind, ins));
            }
            n.outputs.push(*nets.last().unwrap());
            let canonical = emit_json(&n);
            let reparsed = parse_json(&canonical).unwrap();
            assert_eq!(emit_json(&reparsed), canonical);
        }
    }
}
