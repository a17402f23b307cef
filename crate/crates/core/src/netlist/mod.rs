//! Gate-level netlist representation: a DAG of primitive gates over dense
//! net ids, with role-tagged primary inputs and optional flip-flops.

mod blif;
mod json;
mod topo;
mod unroll;

pub use blif::{parse_blif, BlifError};
pub use json::{emit_json, parse_json, JsonError};
pub use topo::{topo_order, CycleError};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Dense identifier of a net (wire).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NetId(pub u32);

/// Dense identifier of a gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GateId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl GateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Primitive gate kinds. MUX2 selects input `a` when `sel = 0` and `b` when
/// `sel = 1`; the input order is (sel, a, b). This convention is relied on by
/// the locking transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Mux2,
    Const0,
    Const1,
}

impl GateKind {
    /// Number of inputs the kind requires.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::Buf => 1,
            GateKind::Mux2 => 3,
            GateKind::Const0 | GateKind::Const1 => 0,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Mux2 => "MUX2",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }
}

/// Role of a primary input bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortRole {
    Secret,
    #[serde(rename = "lolo_key")]
    LockingKey,
    Operational,
}

/// One primary input bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortBit {
    pub net: NetId,
    pub name: String,
    pub role: PortRole,
    /// Bit index within the role group.
    pub bit: u32,
}

/// A combinational gate instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

/// Flip-flop reset value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DffInit {
    Zero,
    One,
    /// Unknown reset state; unrolling exposes it as a fresh operational input.
    X,
}

/// A D flip-flop. `q` is treated as a combinational source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dff {
    pub d: NetId,
    pub q: NetId,
    pub init: DffInit,
}

/// What drives a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(GateId),
    DffQ(usize),
}

/// Gate-level netlist. Immutable after construction in analysis contexts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    /// Optional net names, indexed by `NetId`.
    pub net_names: Vec<Option<String>>,
    pub inputs: Vec<PortBit>,
    pub outputs: Vec<NetId>,
    pub gates: Vec<Gate>,
    pub dffs: Vec<Dff>,
}

/// A single validation violation, referencing the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ArityMismatch { gate: GateId, kind: GateKind, got: usize, want: usize },
    MultipleDrivers { net: NetId },
    NoDriver { net: NetId },
    NetOutOfRange { net: NetId },
    DuplicateName { name: String },
    DuplicateRoleBit { role: PortRole, bit: u32 },
    NoOutputs,
    CombinationalCycle { nets: Vec<NetId> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ArityMismatch { gate, kind, got, want } => write!(
                f,
                "gate g{} ({}) has {} inputs, expected {}",
                gate.0,
                kind.name(),
                got,
                want
            ),
            Violation::MultipleDrivers { net } => write!(f, "net {net} has multiple drivers"),
            Violation::NoDriver { net } => write!(f, "net {net} has no driver"),
            Violation::NetOutOfRange { net } => write!(f, "net id {net} out of range"),
            Violation::DuplicateName { name } => write!(f, "duplicate net name {name:?}"),
            Violation::DuplicateRoleBit { role, bit } => {
                write!(f, "duplicate input bit {bit} for role {role:?}")
            }
            Violation::NoOutputs => write!(f, "netlist has no primary outputs"),
            Violation::CombinationalCycle { nets } => {
                write!(f, "combinational cycle through nets: ")?;
                for (i, n) in nets.iter().enumerate() {
                    if i > 0 {
                        write!(f, " -> ")?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
        }
    }
}

impl Netlist {
    pub fn new() -> Self {
        Netlist::default()
    }

    pub fn net_count(&self) -> usize {
        self.net_names.len()
    }

    /// Allocate a fresh unnamed net.
    pub fn fresh_net(&mut self) -> NetId {
        self.net_names.push(None);
        NetId((self.net_names.len() - 1) as u32)
    }

    /// Allocate a fresh named net.
    pub fn fresh_named_net(&mut self, name: impl Into<String>) -> NetId {
        self.net_names.push(Some(name.into()));
        NetId((self.net_names.len() - 1) as u32)
    }

    /// Add a primary input with a fresh net and return that net.
    pub fn add_input(&mut self, name: impl Into<String>, role: PortRole, bit: u32) -> NetId {
        let name = name.into();
        let net = self.fresh_named_net(name.clone());
        self.inputs.push(PortBit { net, name, role, bit });
        net
    }

    /// Add a gate driving a fresh net; returns the output net.
    pub fn add_gate(&mut self, kind: GateKind, inputs: Vec<NetId>) -> NetId {
        let output = self.fresh_net();
        self.gates.push(Gate { kind, inputs, output });
        output
    }

    /// Add a gate driving an existing net.
    pub fn add_gate_onto(&mut self, kind: GateKind, inputs: Vec<NetId>, output: NetId) -> GateId {
        self.gates.push(Gate { kind, inputs, output });
        GateId((self.gates.len() - 1) as u32)
    }

    pub fn net_name(&self, net: NetId) -> Option<&str> {
        self.net_names.get(net.index()).and_then(|n| n.as_deref())
    }

    /// Display name of a net; unnamed nets render as `n<id>`.
    pub fn net_label(&self, net: NetId) -> String {
        match self.net_name(net) {
            Some(n) => n.to_string(),
            None => format!("n{}", net.0),
        }
    }

    pub fn input_by_name(&self, name: &str) -> Option<&PortBit> {
        self.inputs.iter().find(|p| p.name == name)
    }

    /// Primary input bits of a given role, in declaration order.
    pub fn inputs_with_role(&self, role: PortRole) -> impl Iterator<Item = &PortBit> {
        self.inputs.iter().filter(move |p| p.role == role)
    }

    pub fn is_combinational(&self) -> bool {
        self.dffs.is_empty()
    }

    /// Map each net to its driver, complaining about double/missing drivers.
    pub fn driver_map(&self) -> (Vec<Option<Driver>>, Vec<Violation>) {
        let mut drivers: Vec<Option<Driver>> = vec![None; self.net_count()];
        let mut violations = Vec::new();
        let set = |net: NetId, d: Driver, drivers: &mut Vec<Option<Driver>>, v: &mut Vec<Violation>| {
            if net.index() >= drivers.len() {
                v.push(Violation::NetOutOfRange { net });
                return;
            }
            if drivers[net.index()].is_some() {
                v.push(Violation::MultipleDrivers { net });
            } else {
                drivers[net.index()] = Some(d);
            }
        };
        for (i, p) in self.inputs.iter().enumerate() {
            set(p.net, Driver::Input(i), &mut drivers, &mut violations);
        }
        for (i, g) in self.gates.iter().enumerate() {
            set(g.output, Driver::Gate(GateId(i as u32)), &mut drivers, &mut violations);
        }
        for (i, d) in self.dffs.iter().enumerate() {
            set(d.q, Driver::DffQ(i), &mut drivers, &mut violations);
        }
        (drivers, violations)
    }

    /// Check all structural invariants; an empty list means the netlist is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let (drivers, mut violations) = self.driver_map();

        for (i, g) in self.gates.iter().enumerate() {
            let want = g.kind.arity();
            if g.inputs.len() != want {
                violations.push(Violation::ArityMismatch {
                    gate: GateId(i as u32),
                    kind: g.kind,
                    got: g.inputs.len(),
                    want,
                });
            }
        }

        // Every referenced net must resolve and be driven.
        let check_ref = |net: NetId, violations: &mut Vec<Violation>| {
            if net.index() >= self.net_count() {
                violations.push(Violation::NetOutOfRange { net });
            } else if drivers[net.index()].is_none()
                && !violations.iter().any(|v| matches!(v, Violation::NoDriver { net: n } if *n == net))
            {
                violations.push(Violation::NoDriver { net });
            }
        };
        for g in &self.gates {
            for &n in &g.inputs {
                check_ref(n, &mut violations);
            }
        }
        for d in &self.dffs {
            check_ref(d.d, &mut violations);
        }
        for &o in &self.outputs {
            check_ref(o, &mut violations);
        }

        let mut seen_names: HashMap<&str, ()> = HashMap::new();
        for name in self.net_names.iter().flatten() {
            if seen_names.insert(name.as_str(), ()).is_some() {
                violations.push(Violation::DuplicateName { name: name.clone() });
            }
        }
        let mut seen_bits: HashMap<(PortRole, u32), ()> = HashMap::new();
        for p in &self.inputs {
            if seen_bits.insert((p.role, p.bit), ()).is_some() {
                violations.push(Violation::DuplicateRoleBit { role: p.role, bit: p.bit });
            }
        }
        if self.outputs.is_empty() {
            violations.push(Violation::NoOutputs);
        }

        if violations.is_empty() {
            if let Err(cycle) = topo_order(self) {
                violations.push(Violation::CombinationalCycle { nets: cycle.nets });
            }
        }
        violations
    }
}

pub use unroll::{simulate_sequential, unroll, UnrollError};
