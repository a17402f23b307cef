//! Two-valued and pessimistic three-valued simulation, plus equivalence
//! checking and the brute-force leakage oracle.

mod brute;
mod equiv;

pub use brute::{brute_force_leakage, BruteForceError, BruteVerdict};
pub use equiv::{equivalence_check, EquivMethod, EquivResult, EquivError};

use crate::netlist::{GateKind, NetId, Netlist};
use thiserror::Error;

/// Three-valued logic value with pessimistic (Kleene) semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicValue {
    Zero,
    One,
    X,
}

impl From<bool> for LogicValue {
    fn from(b: bool) -> Self {
        if b {
            LogicValue::One
        } else {
            LogicValue::Zero
        }
    }
}

impl LogicValue {
    pub fn to_bool(self) -> Option<bool> {
        match self {
            LogicValue::Zero => Some(false),
            LogicValue::One => Some(true),
            LogicValue::X => None,
        }
    }

    fn not(self) -> LogicValue {
        match self {
            LogicValue::Zero => LogicValue::One,
            LogicValue::One => LogicValue::Zero,
            LogicValue::X => LogicValue::X,
        }
    }

    fn and(self, other: LogicValue) -> LogicValue {
        use LogicValue::*;
        match (self, other) {
            (Zero, _) | (_, Zero) => Zero,
            (One, One) => One,
            _ => X,
        }
    }

    fn or(self, other: LogicValue) -> LogicValue {
        use LogicValue::*;
        match (self, other) {
            (One, _) | (_, One) => One,
            (Zero, Zero) => Zero,
            _ => X,
        }
    }

    fn xor(self, other: LogicValue) -> LogicValue {
        use LogicValue::*;
        match (self, other) {
            (X, _) | (_, X) => X,
            (a, b) => LogicValue::from(a != b),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("input {0:?} missing from assignment")]
    MissingInput(String),
    #[error("assignment has {got} values for {want} inputs")]
    WrongArity { got: usize, want: usize },
    #[error("netlist is sequential; unroll before simulating")]
    Sequential,
    #[error("netlist invalid: {0}")]
    Invalid(String),
}

pub(crate) fn eval_gate_bool(kind: GateKind, inputs: &[NetId], values: &[Option<bool>]) -> bool {
    let v = |i: usize| values[inputs[i].index()].expect("fan-in evaluated");
    match kind {
        GateKind::And => v(0) & v(1),
        GateKind::Nand => !(v(0) & v(1)),
        GateKind::Or => v(0) | v(1),
        GateKind::Nor => !(v(0) | v(1)),
        GateKind::Xor => v(0) ^ v(1),
        GateKind::Xnor => !(v(0) ^ v(1)),
        GateKind::Not => !v(0),
        GateKind::Buf => v(0),
        GateKind::Mux2 => {
            if v(0) {
                v(2)
            } else {
                v(1)
            }
        }
        GateKind::Const0 => false,
        GateKind::Const1 => true,
    }
}

pub(crate) fn eval_gate3(kind: GateKind, inputs: &[NetId], values: &[LogicValue]) -> LogicValue {
    let v = |i: usize| values[inputs[i].index()];
    match kind {
        GateKind::And => v(0).and(v(1)),
        GateKind::Nand => v(0).and(v(1)).not(),
        GateKind::Or => v(0).or(v(1)),
        GateKind::Nor => v(0).or(v(1)).not(),
        GateKind::Xor => v(0).xor(v(1)),
        GateKind::Xnor => v(0).xor(v(1)).not(),
        GateKind::Not => v(0).not(),
        GateKind::Buf => v(0),
        GateKind::Mux2 => match v(0) {
            LogicValue::Zero => v(1),
            LogicValue::One => v(2),
            LogicValue::X => {
                if v(1) == v(2) && v(1) != LogicValue::X {
                    v(1)
                } else {
                    LogicValue::X
                }
            }
        },
        GateKind::Const0 => LogicValue::Zero,
        GateKind::Const1 => LogicValue::One,
    }
}

/// Two-valued simulation of a combinational netlist. `inputs[i]` assigns the
/// i-th declared primary input.
pub fn simulate(netlist: &Netlist, inputs: &[bool]) -> Result<Vec<bool>, SimError> {
    if !netlist.is_combinational() {
        return Err(SimError::Sequential);
    }
    if inputs.len() != netlist.inputs.len() {
        return Err(SimError::WrongArity { got: inputs.len(), want: netlist.inputs.len() });
    }
    let order = crate::netlist::topo_order(netlist).map_err(|e| SimError::Invalid(e.to_string()))?;
    let mut values: Vec<Option<bool>> = vec![None; netlist.net_count()];
    for (i, p) in netlist.inputs.iter().enumerate() {
        values[p.net.index()] = Some(inputs[i]);
    }
    for g in order {
        let gate = &netlist.gates[g.index()];
        values[gate.output.index()] = Some(eval_gate_bool(gate.kind, &gate.inputs, &values));
    }
    Ok(netlist.outputs.iter().map(|&o| values[o.index()].expect("driven output")).collect())
}

/// Two-valued simulation with a name-keyed assignment.
pub fn simulate_by_name(netlist: &Netlist, assignment: &[(String, bool)]) -> Result<Vec<bool>, SimError> {
    let mut inputs = Vec::with_capacity(netlist.inputs.len());
    for p in &netlist.inputs {
        let v = assignment
            .iter()
            .find(|(n, _)| n == &p.name)
            .map(|(_, v)| *v)
            .ok_or_else(|| SimError::MissingInput(p.name.clone()))?;
        inputs.push(v);
    }
    simulate(netlist, &inputs)
}

/// Pessimistic three-valued simulation; unassigned inputs are X. When no X
/// is present this coincides with [`simulate`].
pub fn simulate3(netlist: &Netlist, inputs: &[LogicValue]) -> Result<Vec<LogicValue>, SimError> {
    if !netlist.is_combinational() {
        return Err(SimError::Sequential);
    }
    if inputs.len() != netlist.inputs.len() {
        return Err(SimError::WrongArity { got: inputs.len(), want: netlist.inputs.len() });
    }
    let order = crate::netlist::topo_order(netlist).map_err(|e| SimError::Invalid(e.to_string()))?;
    let mut values: Vec<LogicValue> = vec![LogicValue::X; netlist.net_count()];
    for (i, p) in netlist.inputs.iter().enumerate() {
        values[p.net.index()] = inputs[i];
    }
    for g in order {
        let gate = &netlist.gates[g.index()];
        values[gate.output.index()] = eval_gate3(gate.kind, &gate.inputs, &values);
    }
    Ok(netlist.outputs.iter().map(|&o| values[o.index()]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::PortRole;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn buf_identity() {
        let mut n = Netlist::new();
        let a = n.add_input("in", PortRole::Operational, 0);
        let o = n.add_gate(GateKind::Buf, vec![a]);
        n.outputs.push(o);
        assert_eq!(simulate(&n, &[true]).unwrap(), vec![true]);
    }

    #[test]
    fn and_with_controlling_zero() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Operational, 0);
        let b = n.add_input("b", PortRole::Secret, 0);
        let o = n.add_gate(GateKind::And, vec![a, b]);
        n.outputs.push(o);
        let out = simulate3(&n, &[LogicValue::Zero, LogicValue::X]).unwrap();
        assert_eq!(out, vec![LogicValue::Zero]);
    }

    #[test]
    fn xor_with_x_is_x() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Secret, 0);
        let b = n.add_input("b", PortRole::Operational, 0);
        let o = n.add_gate(GateKind::Xor, vec![a, b]);
        n.outputs.push(o);
        let out = simulate3(&n, &[LogicValue::X, LogicValue::Zero]).unwrap();
        assert_eq!(out, vec![LogicValue::X]);
    }

    fn random_netlist(rng: &mut impl Rng, n_inputs: usize) -> Netlist {
        let mut n = Netlist::new();
        let mut nets: Vec<NetId> = (0..n_inputs)
            .map(|i| n.add_input(format!("i{i}"), PortRole::Operational, i as u32))
            .collect();
        for _ in 0..rng.gen_range(2..25) {
            let kind = *[
                GateKind::And,
                GateKind::Or,
                GateKind::Xor,
                GateKind::Nand,
                GateKind::Nor,
                GateKind::Xnor,
                GateKind::Not,
                GateKind::Mux2,
            ]
            .choose(rng)
            .unwrap();
            let ins: Vec<NetId> = (0..kind.arity()).map(|_| *nets.choose(rng).unwrap()).collect();
            nets.push(n.add_gate(kind, ins));
        }
        n.outputs.push(*nets.last().unwrap());
        n
    }

    /// Whenever simulate3 yields a determinate output, every completion of
    /// the X inputs must agree under two-valued simulation.
    #[test]
    fn simulate3_sound_under_all_completions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n_inputs = rng.gen_range(2..6);
            let n = random_netlist(&mut rng, n_inputs);
            let partial: Vec<LogicValue> = (0..n_inputs)
                .map(|_| match rng.gen_range(0..3) {
                    0 => LogicValue::Zero,
                    1 => LogicValue::One,
                    _ => LogicValue::X,
                })
                .collect();
            let three = simulate3(&n, &partial).unwrap();
            let x_positions: Vec<usize> = partial
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == LogicValue::X)
                .map(|(i, _)| i)
                .collect();
            for completion in 0..(1u32 << x_positions.len()) {
                let mut full: Vec<bool> =
                    partial.iter().map(|v| v.to_bool().unwrap_or(false)).collect();
                for (k, &pos) in x_positions.iter().enumerate() {
                    full[pos] = (completion >> k) & 1 == 1;
                }
                let two = simulate(&n, &full).unwrap();
                for (o3, o2) in three.iter().zip(&two) {
                    if let Some(v) = o3.to_bool() {
                        assert_eq!(v, *o2, "determinate 3-valued output must be invariant");
                    }
                }
            }
        }
    }

    /// Adding assignments never flips a determinate output.
    #[test]
    fn monotone_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let n_inputs = rng.gen_range(2..6);
            let n = random_netlist(&mut rng, n_inputs);
            let partial: Vec<LogicValue> = (0..n_inputs)
                .map(|_| match rng.gen_range(0..3) {
                    0 => LogicValue::Zero,
                    1 => LogicValue::One,
                    _ => LogicValue::X,
                })
                .collect();
            let mut refined = partial.clone();
            for v in refined.iter_mut() {
                if *v == LogicValue::X && rng.gen_bool(0.5) {
                    *v = LogicValue::from(rng.gen_bool(0.5));
                }
            }
            let before = simulate3(&n, &partial).unwrap();
            let after = simulate3(&n, &refined).unwrap();
            for (b, a) in before.iter().zip(&after) {
                if let Some(v) = b.to_bool() {
                    assert_eq!(Some(v), a.to_bool());
                }
            }
        }
    }
}
