//! BLIF subset importer. Supports a single `.model` with `.inputs`,
//! `.outputs`, `.names` covers expressible in the gate library, and simple
//! `.latch` flip-flops.

use super::{Dff, DffInit, Gate, GateKind, NetId, Netlist, PortBit, PortRole};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlifError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("line {line}: .names table over {inputs} inputs does not match any library gate")]
    NoLibraryMatch { line: usize, inputs: usize },
    #[error("imported netlist invalid: {0}")]
    Invalid(String),
}

/// Assigns roles to primary inputs by name; inputs not covered default to
/// `Operational`.
pub type RoleMap<'a> = &'a dyn Fn(&str) -> Option<PortRole>;

struct Cover {
    inputs: Vec<String>,
    output: String,
    rows: Vec<(Vec<Option<bool>>, bool)>,
    line: usize,
}

fn truth_table(cover: &Cover) -> Vec<bool> {
    let n = cover.inputs.len();
    // default phase is the complement of the cover's row outputs
    let on_value = cover.rows.first().map(|r| r.1).unwrap_or(true);
    let mut table = vec![!on_value; 1 << n];
    for point in 0..(1usize << n) {
        for (pattern, value) in &cover.rows {
            let matches = pattern
                .iter()
                .enumerate()
                .all(|(i, p)| p.map_or(true, |b| ((point >> i) & 1 == 1) == b));
            if matches {
                table[point] = *value;
            }
        }
    }
    table
}

/// Library tables over up to 3 inputs for each gate kind. Input bit i of the
/// index corresponds to the i-th `.names` input.
fn library() -> Vec<(GateKind, usize, Vec<bool>)> {
    let tt2 = |f: fn(bool, bool) -> bool| {
        (0..4).map(|i| f(i & 1 == 1, i & 2 == 2)).collect::<Vec<bool>>()
    };
    let tt1 = |f: fn(bool) -> bool| (0..2).map(|i| f(i & 1 == 1)).collect::<Vec<bool>>();
    // MUX2 with .names input order (sel, a, b)
    let mux: Vec<bool> = (0..8)
        .map(|i| {
            let (s, a, b) = (i & 1 == 1, i & 2 == 2, i & 4 == 4);
            if s {
                b
            } else {
                a
            }
        })
        .collect();
    vec![
        (GateKind::And, 2, tt2(|a, b| a & b)),
        (GateKind::Nand, 2, tt2(|a, b| !(a & b))),
        (GateKind::Or, 2, tt2(|a, b| a | b)),
        (GateKind::Nor, 2, tt2(|a, b| !(a | b))),
        (GateKind::Xor, 2, tt2(|a, b| a ^ b)),
        (GateKind::Xnor, 2, tt2(|a, b| !(a ^ b))),
        (GateKind::Not, 1, tt1(|a| !a)),
        (GateKind::Buf, 1, tt1(|a| a)),
        (GateKind::Mux2, 3, mux),
        (GateKind::Const0, 0, vec![false]),
        (GateKind::Const1, 0, vec![true]),
    ]
}

/// Parse BLIF text into a netlist, mapping each `.names` truth table onto a
/// library gate. Roles are assigned via `roles`; unmatched inputs are
/// operational.
pub fn parse_blif(bytes: &[u8], roles: RoleMap) -> Result<Netlist, BlifError> {
    let text = String::from_utf8_lossy(bytes);
    let mut model_seen = false;
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut covers: Vec<Cover> = Vec::new();
    let mut latches: Vec<(String, String, DffInit)> = Vec::new();

    // join continuation lines
    let mut logical_lines: Vec<(usize, String)> = Vec::new();
    let mut pending = String::new();
    let mut pending_line = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim_end();
        if pending.is_empty() {
            pending_line = lineno + 1;
        }
        if let Some(stripped) = line.strip_suffix('\\') {
            pending.push_str(stripped);
            pending.push(' ');
            continue;
        }
        pending.push_str(line);
        if !pending.trim().is_empty() {
            logical_lines.push((pending_line, std::mem::take(&mut pending)));
        } else {
            pending.clear();
        }
    }

    let mut i = 0;
    while i < logical_lines.len() {
        let (lineno, line) = &logical_lines[i];
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            ".model" => {
                if model_seen {
                    return Err(BlifError::Unsupported("multiple models".into()));
                }
                model_seen = true;
            }
            ".inputs" => inputs.extend(tokens[1..].iter().map(|s| s.to_string())),
            ".outputs" => outputs.extend(tokens[1..].iter().map(|s| s.to_string())),
            ".latch" => {
                // .latch <d> <q> [<type> <control>] [<init>]
                if tokens.len() < 3 {
                    return Err(BlifError::Parse(*lineno, "malformed .latch".into()));
                }
                let init = match tokens.last().copied() {
                    Some("0") => DffInit::Zero,
                    Some("1") => DffInit::One,
                    Some("2") | Some("3") => DffInit::X,
                    _ if tokens.len() == 3 => DffInit::X,
                    Some(t) if t == tokens[2] => DffInit::X,
                    Some(other) => {
                        return Err(BlifError::Parse(*lineno, format!("latch init {other:?}")))
                    }
                    None => DffInit::X,
                };
                if tokens.len() > 3 && tokens[3] != "re" && !tokens[3].chars().all(|c| c.is_ascii_digit()) {
                    return Err(BlifError::Unsupported(format!(
                        "latch type {:?} (only simple rising-edge DFFs)",
                        tokens[3]
                    )));
                }
                latches.push((tokens[1].to_string(), tokens[2].to_string(), init));
            }
            ".names" => {
                let sigs: Vec<String> = tokens[1..].iter().map(|s| s.to_string()).collect();
                if sigs.is_empty() {
                    return Err(BlifError::Parse(*lineno, "empty .names".into()));
                }
                let (ins, out) = sigs.split_at(sigs.len() - 1);
                let mut rows = Vec::new();
                while i + 1 < logical_lines.len() && !logical_lines[i + 1].1.trim_start().starts_with('.') {
                    i += 1;
                    let (rl, row) = &logical_lines[i];
                    let parts: Vec<&str> = row.split_whitespace().collect();
                    let (pat, val) = match parts.len() {
                        1 if ins.is_empty() => ("", parts[0]),
                        2 => (parts[0], parts[1]),
                        _ => return Err(BlifError::Parse(*rl, format!("bad cover row {row:?}"))),
                    };
                    if pat.len() != ins.len() {
                        return Err(BlifError::Parse(*rl, "cover width mismatch".into()));
                    }
                    let pattern: Vec<Option<bool>> = pat
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(Some(false)),
                            '1' => Ok(Some(true)),
                            '-' => Ok(None),
                            _ => Err(BlifError::Parse(*rl, format!("bad cover char {c:?}"))),
                        })
                        .collect::<Result<_, _>>()?;
                    let value = match val {
                        "0" => false,
                        "1" => true,
                        _ => return Err(BlifError::Parse(*rl, format!("bad cover value {val:?}"))),
                    };
                    rows.push((pattern, value));
                }
                covers.push(Cover {
                    inputs: ins.to_vec(),
                    output: out[0].clone(),
                    rows,
                    line: *lineno,
                });
            }
            ".end" => break,
            other if other.starts_with('.') => {
                return Err(BlifError::Unsupported(other.to_string()));
            }
            _ => return Err(BlifError::Parse(*lineno, format!("unexpected line {line:?}"))),
        }
        i += 1;
    }

    // Build the netlist.
    let mut netlist = Netlist::new();
    let mut by_name: HashMap<String, NetId> = HashMap::new();
    let intern = |name: &str, netlist: &mut Netlist, by_name: &mut HashMap<String, NetId>| {
        *by_name
            .entry(name.to_string())
            .or_insert_with(|| netlist.fresh_named_net(name))
    };

    let mut role_bits: HashMap<PortRole, u32> = HashMap::new();
    for name in &inputs {
        let net = intern(name, &mut netlist, &mut by_name);
        let role = roles(name).unwrap_or(PortRole::Operational);
        let bit = role_bits.entry(role).or_insert(0);
        netlist.inputs.push(PortBit { net, name: name.clone(), role, bit: *bit });
        *bit += 1;
    }

    let lib = library();
    for cover in &covers {
        let table = truth_table(cover);
        let kind = lib
            .iter()
            .find(|(_, arity, t)| *arity == cover.inputs.len() && *t == table)
            .map(|(k, _, _)| *k)
            .ok_or(BlifError::NoLibraryMatch { line: cover.line, inputs: cover.inputs.len() })?;
        let ins: Vec<NetId> = cover
            .inputs
            .iter()
            .map(|n| intern(n, &mut netlist, &mut by_name))
            .collect();
        let out = intern(&cover.output, &mut netlist, &mut by_name);
        netlist.gates.push(Gate { kind, inputs: ins, output: out });
    }
    for (d, q, init) in &latches {
        let dn = intern(d, &mut netlist, &mut by_name);
        let qn = intern(q, &mut netlist, &mut by_name);
        netlist.dffs.push(Dff { d: dn, q: qn, init: *init });
    }
    for o in &outputs {
        let net = intern(o, &mut netlist, &mut by_name);
        netlist.outputs.push(net);
    }

    let violations = netlist.validate();
    if !violations.is_empty() {
        return Err(BlifError::Invalid(violations[0].to_string()));
    }
    Ok(netlist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::simulate;

    fn no_roles(_: &str) -> Option<PortRole> {
        None
    }

    #[test]
    fn two_input_and_table() {
        let src = b".model t\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n";
        let n = parse_blif(src, &no_roles).unwrap();
        assert_eq!(n.gates.len(), 1);
        assert_eq!(n.gates[0].kind, GateKind::And);
    }

    #[test]
    fn mux_table_maps_to_mux2() {
        let src = b".model t\n.inputs s a b\n.outputs y\n.names s a b y\n01- 1\n1-1 1\n.end\n";
        let n = parse_blif(src, &no_roles).unwrap();
        assert_eq!(n.gates[0].kind, GateKind::Mux2);
    }

    #[test]
    fn off_set_cover_matches_nand() {
        let src = b".model t\n.inputs a b\n.outputs y\n.names a b y\n11 0\n.end\n";
        let n = parse_blif(src, &no_roles).unwrap();
        assert_eq!(n.gates[0].kind, GateKind::Nand);
    }

    #[test]
    fn multiple_models_unsupported() {
        let src = b".model a\n.inputs x\n.outputs y\n.names x y\n1 1\n.end\n.model b\n";
        // .end stops parsing, so sneak the second model before .end
        let src2 = b".model a\n.model b\n";
        assert!(parse_blif(src, &no_roles).is_ok());
        assert!(matches!(parse_blif(src2, &no_roles), Err(BlifError::Unsupported(_))));
    }

    #[test]
    fn random_blif_matches_json_import_by_simulation() {
        // same 3-gate function written as BLIF and built directly
        let src = b".model t\n.inputs a b c\n.outputs y\n.names a b t0\n10 1\n01 1\n.names t0 c y\n11 1\n.end\n";
        let blif = parse_blif(src, &no_roles).unwrap();
        let mut direct = Netlist::new();
        let a = direct.add_input("a", PortRole::Operational, 0);
        let b = direct.add_input("b", PortRole::Operational, 1);
        let c = direct.add_input("c", PortRole::Operational, 2);
        let t0 = direct.add_gate(GateKind::Xor, vec![a, b]);
        let y = direct.add_gate(GateKind::And, vec![t0, c]);
        direct.outputs.push(y);
        for point in 0..8u32 {
            let assign = |n: &Netlist| -> Vec<bool> {
                n.inputs.iter().enumerate().map(|(i, _)| (point >> i) & 1 == 1).collect()
            };
            assert_eq!(
                simulate(&blif, &assign(&blif)).unwrap(),
                simulate(&direct, &assign(&direct)).unwrap()
            );
        }
    }
}
