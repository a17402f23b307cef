//! JSON form of a locked netlist: the plain netlist document with three
//! extra top-level fields, `key` ("0101..."), `key_inputs` (input names,
//! in key order), and `provenance`.

use serde_json::Value;
use thiserror::Error;

use crate::netlist::{emit_json, parse_json, JsonError, NetId};

use super::{KeyBitProvenance, LockedNetlist};

#[derive(Debug, Error)]
pub enum LockedJsonError {
    #[error("malformed locked-netlist JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{0}")]
    Netlist(#[from] JsonError),
    #[error("key string contains a character other than 0 or 1")]
    BadKeyChar,
    #[error("key has {key} bits but {inputs} key inputs are listed")]
    LengthMismatch { key: usize, inputs: usize },
    #[error("key input {0:?} is not an input of the netlist")]
    UnknownKeyInput(String),
}

pub fn locked_to_json(locked: &LockedNetlist) -> Vec<u8> {
    let mut doc: Value =
        serde_json::from_slice(&emit_json(&locked.netlist)).expect("netlist JSON is valid");
    let names: Vec<Value> = locked
        .key_inputs
        .iter()
        .map(|&net| {
            Value::String(
                locked.netlist.net_name(net).expect("key inputs are named").to_string(),
            )
        })
        .collect();
    let obj = doc.as_object_mut().expect("netlist JSON is an object");
    obj.insert("key".into(), Value::String(locked.key_string()));
    obj.insert("key_inputs".into(), Value::Array(names));
    obj.insert(
        "provenance".into(),
        serde_json::to_value(&locked.provenance).expect("serializable"),
    );
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("serializable");
    bytes.push(b'\n');
    bytes
}

pub fn parse_locked_json(bytes: &[u8]) -> Result<LockedNetlist, LockedJsonError> {
    let mut doc: Value = serde_json::from_slice(bytes)?;
    let obj = doc.as_object_mut().ok_or_else(|| {
        LockedJsonError::Syntax(serde::de::Error::custom("top level is not an object"))
    })?;
    let key_str: String = serde_json::from_value(
        obj.remove("key").unwrap_or(Value::String(String::new())),
    )?;
    let names: Vec<String> =
        serde_json::from_value(obj.remove("key_inputs").unwrap_or(Value::Array(vec![])))?;
    let provenance: Vec<KeyBitProvenance> =
        serde_json::from_value(obj.remove("provenance").unwrap_or(Value::Array(vec![])))?;
    let netlist = parse_json(&serde_json::to_vec(&doc).expect("reserializable"))?;

    let mut key = Vec::with_capacity(key_str.len());
    for c in key_str.chars() {
        match c {
            '0' => key.push(false),
            '1' => key.push(true),
            _ => return Err(LockedJsonError::BadKeyChar),
        }
    }
    if key.len() != names.len() {
        return Err(LockedJsonError::LengthMismatch { key: key.len(), inputs: names.len() });
    }
    let key_inputs: Vec<NetId> = names
        .iter()
        .map(|name| {
            netlist
                .input_by_name(name)
                .map(|p| p.net)
                .ok_or_else(|| LockedJsonError::UnknownKeyInput(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    Ok(LockedNetlist { netlist, key, key_inputs, provenance })
}

#[cfg(test)]
mod tests {
    use crate::netlist::{GateKind, Netlist, PortRole};

    use super::super::{epic_lock, KeySize, LockingConfig, Scheme};
    use super::*;

    #[test]
    fn roundtrip_preserves_key_and_provenance() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Secret, 0);
        let b = n.add_input("b", PortRole::Operational, 0);
        let g = n.add_gate(GateKind::Xor, vec![a, b]);
        n.outputs.push(g);
        let cfg = LockingConfig::new(Scheme::Epic, KeySize::Absolute(2), 5);
        let locked = epic_lock(&n, &cfg).unwrap();
        let bytes = locked_to_json(&locked);
        let back = parse_locked_json(&bytes).unwrap();
        // nets are referenced by name, so compare serialized forms
        assert_eq!(locked_to_json(&back), bytes);
        assert_eq!(back.key, locked.key);
        assert_eq!(back.provenance, locked.provenance);
    }

    #[test]
    fn key_and_input_lengths_must_agree() {
        let text = br#"{
            "inputs": [{"name": "a", "role": "operational", "bit": 0}],
            "outputs": ["a"],
            "gates": [], "dffs": [],
            "key": "01", "key_inputs": ["a"], "provenance": []
        }"#;
        assert!(matches!(
            parse_locked_json(text),
            Err(LockedJsonError::LengthMismatch { key: 2, inputs: 1 })
        ));
    }

    #[test]
    fn plain_netlist_parses_as_unkeyed() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Operational, 0);
        let g = n.add_gate(GateKind::Buf, vec![a]);
        n.outputs.push(g);
        let locked = parse_locked_json(&emit_json(&n)).unwrap();
        assert!(locked.key.is_empty());
        assert_eq!(emit_json(&locked.netlist), emit_json(&n));
    }
}
