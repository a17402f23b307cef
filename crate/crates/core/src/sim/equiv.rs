//! Combinational equivalence checking: exhaustive, random falsification,
//! and a complete SAT miter.

use super::simulate;
use crate::netlist::Netlist;
use crate::sat::{solve, Encoder, Lit, SolveBudget, SolveResult};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivMethod {
    /// Complete for up to 20 shared inputs.
    Exhaustive,
    /// Falsification only: n random vectors from the given seed.
    Random { vectors: usize, seed: u64 },
    /// Complete via Tseitin miter over the internal solver.
    SatMiter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivResult {
    Equal,
    /// Differing input vector, in the shared input order of `a`.
    Counterexample(Vec<bool>),
}

impl EquivResult {
    pub fn is_equal(&self) -> bool {
        matches!(self, EquivResult::Equal)
    }
}

#[derive(Debug, Error)]
pub enum EquivError {
    #[error("input interfaces differ: {0}")]
    InterfaceMismatch(String),
    #[error("exhaustive check limited to 20 inputs, got {0}")]
    TooManyInputs(usize),
    #[error("output counts differ: {0} vs {1}")]
    OutputMismatch(usize, usize),
    #[error("netlist is sequential; unroll before checking")]
    Sequential,
}

/// Map b's input order onto a's, matching by input name.
fn interface_map(a: &Netlist, b: &Netlist) -> Result<Vec<usize>, EquivError> {
    if a.inputs.len() != b.inputs.len() {
        return Err(EquivError::InterfaceMismatch(format!(
            "{} vs {} inputs",
            a.inputs.len(),
            b.inputs.len()
        )));
    }
    a.inputs
        .iter()
        .map(|p| {
            b.inputs
                .iter()
                .position(|q| q.name == p.name)
                .ok_or_else(|| EquivError::InterfaceMismatch(format!("input {:?} missing", p.name)))
        })
        .collect()
}

pub fn equivalence_check(
    a: &Netlist,
    b: &Netlist,
    method: EquivMethod,
) -> Result<EquivResult, EquivError> {
    if !a.is_combinational() || !b.is_combinational() {
        return Err(EquivError::Sequential);
    }
    let b_index = interface_map(a, b)?;
    if a.outputs.len() != b.outputs.len() {
        return Err(EquivError::OutputMismatch(a.outputs.len(), b.outputs.len()));
    }
    let n = a.inputs.len();

    let check_vector = |vec_a: &[bool]| -> Option<bool> {
        let mut vec_b = vec![false; n];
        for (i, &bi) in b_index.iter().enumerate() {
            vec_b[bi] = vec_a[i];
        }
        let oa = simulate(a, vec_a).expect("valid");
        let ob = simulate(b, &vec_b).expect("valid");
        Some(oa == ob)
    };

    match method {
        EquivMethod::Exhaustive => {
            if n > 20 {
                return Err(EquivError::TooManyInputs(n));
            }
            for mask in 0..(1u64 << n) {
                let v: Vec<bool> = (0..n).map(|i| (mask >> i) & 1 == 1).collect();
                if check_vector(&v) == Some(false) {
                    return Ok(EquivResult::Counterexample(v));
                }
            }
            Ok(EquivResult::Equal)
        }
        EquivMethod::Random { vectors, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..vectors {
                let v: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                if check_vector(&v) == Some(false) {
                    return Ok(EquivResult::Counterexample(v));
                }
            }
            Ok(EquivResult::Equal)
        }
        EquivMethod::SatMiter => {
            let mut enc = Encoder::new();
            let mut map_a = HashMap::new();
            enc.encode(a, &mut map_a);
            // share input literals by name
            let mut map_b = HashMap::new();
            for (i, p) in a.inputs.iter().enumerate() {
                map_b.insert(b.inputs[b_index[i]].net, map_a[&p.net]);
            }
            enc.encode(b, &mut map_b);
            // any output differs
            let diffs: Vec<Lit> = a
                .outputs
                .iter()
                .zip(&b.outputs)
                .map(|(&oa, &ob)| enc.xor(map_a[&oa], map_b[&ob]))
                .collect();
            enc.cnf.add_clause(diffs);
            match solve(&enc.cnf, SolveBudget::UNLIMITED, &[]).0 {
                SolveResult::Unsat => Ok(EquivResult::Equal),
                SolveResult::Sat(model) => {
                    let v: Vec<bool> = a
                        .inputs
                        .iter()
                        .map(|p| {
                            let l = map_a[&p.net];
                            model[(l.var() - 1) as usize] == l.is_positive()
                        })
                        .collect();
                    debug_assert_eq!(check_vector(&v), Some(false));
                    Ok(EquivResult::Counterexample(v))
                }
                SolveResult::Unknown(_) => unreachable!("no budget set"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{GateKind, PortRole};

    fn gate2(kind: GateKind) -> Netlist {
        let mut n = Netlist::new();
        let a = n.add_input("a", PortRole::Operational, 0);
        let b = n.add_input("b", PortRole::Operational, 1);
        let o = n.add_gate(kind, vec![a, b]);
        n.outputs.push(o);
        n
    }

    #[test]
    fn reflexivity() {
        let n = gate2(GateKind::And);
        assert_eq!(
            equivalence_check(&n, &n, EquivMethod::Exhaustive).unwrap(),
            EquivResult::Equal
        );
    }

    #[test]
    fn and_vs_or_counterexample() {
        let a = gate2(GateKind::And);
        let b = gate2(GateKind::Or);
        match equivalence_check(&a, &b, EquivMethod::Exhaustive).unwrap() {
            EquivResult::Counterexample(v) => {
                assert_eq!(v.iter().filter(|&&x| x).count(), 1, "exactly one input high");
            }
            EquivResult::Equal => panic!("AND != OR"),
        }
    }

    #[test]
    fn miter_agrees_with_exhaustive() {
        let a = gate2(GateKind::Xor);
        let mut b = Netlist::new();
        let x = b.add_input("a", PortRole::Operational, 0);
        let y = b.add_input("b", PortRole::Operational, 1);
        // xor as (a|b) & !(a&b)
        let o1 = b.add_gate(GateKind::Or, vec![x, y]);
        let o2 = b.add_gate(GateKind::Nand, vec![x, y]);
        let o = b.add_gate(GateKind::And, vec![o1, o2]);
        b.outputs.push(o);
        assert_eq!(
            equivalence_check(&a, &b, EquivMethod::SatMiter).unwrap(),
            EquivResult::Equal
        );
        let c = gate2(GateKind::Xnor);
        assert!(matches!(
            equivalence_check(&a, &c, EquivMethod::SatMiter).unwrap(),
            EquivResult::Counterexample(_)
        ));
    }

    #[test]
    fn interface_mismatch_detected() {
        let a = gate2(GateKind::And);
        let mut b = Netlist::new();
        let x = b.add_input("a", PortRole::Operational, 0);
        let y = b.add_input("c", PortRole::Operational, 1);
        let o = b.add_gate(GateKind::And, vec![x, y]);
        b.outputs.push(o);
        assert!(matches!(
            equivalence_check(&a, &b, EquivMethod::Exhaustive),
            Err(EquivError::InterfaceMismatch(_))
        ));
    }
}
