//! Tseitin encoding of netlist cones into CNF.

use super::{Cnf, Lit};
use crate::netlist::{GateKind, NetId, Netlist};
use std::collections::HashMap;

/// Incremental encoder: shares literals across multiple encoded circuit
/// copies through the caller-supplied net→literal context.
pub struct Encoder {
    pub cnf: Cnf,
}

impl Encoder {
    pub fn new() -> Encoder {
        Encoder { cnf: Cnf::new() }
    }

    pub fn fresh(&mut self) -> Lit {
        self.cnf.fresh_lit()
    }

    pub fn constant(&mut self, value: bool) -> Lit {
        let l = self.fresh();
        self.cnf.add_clause(vec![if value { l } else { !l }]);
        l
    }

    /// y <-> a & b
    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let y = self.fresh();
        self.cnf.add_clause(vec![!a, !b, y]);
        self.cnf.add_clause(vec![a, !y]);
        self.cnf.add_clause(vec![b, !y]);
        y
    }

    /// y <-> a | b
    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        let y = self.fresh();
        self.cnf.add_clause(vec![a, b, !y]);
        self.cnf.add_clause(vec![!a, y]);
        self.cnf.add_clause(vec![!b, y]);
        y
    }

    /// y <-> a ^ b
    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let y = self.fresh();
        self.cnf.add_clause(vec![!a, !b, !y]);
        self.cnf.add_clause(vec![a, b, !y]);
        self.cnf.add_clause(vec![!a, b, y]);
        self.cnf.add_clause(vec![a, !b, y]);
        y
    }

    /// y <-> (sel ? b : a)
    pub fn mux(&mut self, sel: Lit, a: Lit, b: Lit) -> Lit {
        let y = self.fresh();
        self.cnf.add_clause(vec![sel, !a, y]);
        self.cnf.add_clause(vec![sel, a, !y]);
        self.cnf.add_clause(vec![!sel, !b, y]);
        self.cnf.add_clause(vec![!sel, b, !y]);
        y
    }

    /// Encode one gate given already-encoded input literals.
    pub fn gate(&mut self, kind: GateKind, ins: &[Lit]) -> Lit {
        match kind {
            GateKind::And => self.and(ins[0], ins[1]),
            GateKind::Nand => !self.and(ins[0], ins[1]),
            GateKind::Or => self.or(ins[0], ins[1]),
            GateKind::Nor => !self.or(ins[0], ins[1]),
            GateKind::Xor => self.xor(ins[0], ins[1]),
            GateKind::Xnor => !self.xor(ins[0], ins[1]),
            GateKind::Not => !ins[0],
            GateKind::Buf => ins[0],
            GateKind::Mux2 => self.mux(ins[0], ins[1], ins[2]),
            GateKind::Const0 => self.constant(false),
            GateKind::Const1 => self.constant(true),
        }
    }

    /// Encode the whole combinational netlist. Literals for nets already in
    /// `map` are reused; missing primary-input nets get fresh variables. The
    /// map gains a literal for every net encountered.
    pub fn encode(&mut self, netlist: &Netlist, map: &mut HashMap<NetId, Lit>) {
        let order = crate::netlist::topo_order(netlist).expect("valid combinational netlist");
        for p in &netlist.inputs {
            map.entry(p.net).or_insert_with(|| self.cnf.fresh_lit());
        }
        for g in order {
            let gate = &netlist.gates[g.index()];
            let ins: Vec<Lit> = gate
                .inputs
                .iter()
                .map(|n| *map.get(n).expect("fan-in encoded"))
                .collect();
            let y = self.gate(gate.kind, &ins);
            map.insert(gate.output, y);
        }
    }
}

impl Default for Encoder {
    fn default() -> Self {
        Encoder::new()
    }
}

/// Encode a netlist into a fresh CNF; returns the encoder and net→literal map.
pub fn encode_netlist(netlist: &Netlist) -> (Encoder, HashMap<NetId, Lit>) {
    let mut enc = Encoder::new();
    let mut map = HashMap::new();
    enc.encode(netlist, &mut map);
    (enc, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{Netlist, PortRole};
    use crate::sat::{solve, SolveBudget, SolveResult};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_and_is_three_clauses() {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Operational, 0);
        let b = n.add_input("b", PortRole::Operational, 1);
        let o = n.add_gate(GateKind::And, vec![a, b]);
        n.outputs.push(o);
        let (enc, _) = encode_netlist(&n);
        assert_eq!(enc.cnf.clauses.len(), 3);
        assert_eq!(enc.cnf.num_vars, 3);
    }

    #[test]
    fn const1_is_a_unit_clause() {
        let mut n = Netlist::new();
        let _a = n.add_input("a", PortRole::Operational, 0);
        let o = n.add_gate(GateKind::Const1, vec![]);
        n.outputs.push(o);
        let (enc, map) = encode_netlist(&n);
        let l = map[&o];
        assert!(enc.cnf.clauses.contains(&vec![l]));
    }

    /// Every satisfying model's input projection reproduces the simulated
    /// output value.
    #[test]
    fn models_match_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let mut n = Netlist::new();
            let n_inputs = rng.gen_range(1..8);
            let mut nets: Vec<crate::netlist::NetId> = (0..n_inputs)
                .map(|i| n.add_input(format!("i{i}"), PortRole::Operational, i as u32))
                .collect();
            for _ in 0..rng.gen_range(1..15) {
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
                .choose(&mut rng)
                .unwrap();
                let ins: Vec<_> = (0..kind.arity()).map(|_| *nets.choose(&mut rng).unwrap()).collect();
                nets.push(n.add_gate(kind, ins));
            }
            n.outputs.push(*nets.last().unwrap());
            let (enc, map) = encode_netlist(&n);
            let out_lit = map[&n.outputs[0]];
            // force the output high and check the model against simulation
            let mut cnf = enc.cnf.clone();
            cnf.add_clause(vec![out_lit]);
            if let SolveResult::Sat(model) = solve(&cnf, SolveBudget::UNLIMITED, &[]).0 {
                let inputs: Vec<bool> = n
                    .inputs
                    .iter()
                    .map(|p| {
                        let l = map[&p.net];
                        model[(l.var() - 1) as usize] == l.is_positive()
                    })
                    .collect();
                let sim = crate::sim::simulate(&n, &inputs).unwrap();
                assert!(sim[0], "model projection must drive output to 1");
            }
        }
    }
}
