//! Lowering word designs to gate-level netlists: ripple-carry adders,
//! magnitude comparators, and per-bit multiplexers.

use thiserror::Error;

use crate::netlist::{GateKind, NetId, Netlist, PortRole};

use super::{BinOp, CmpOp, WordDesign, WordError, WordExpr};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LowerError {
    #[error("invalid design: {0}")]
    Invalid(#[from] WordError),
}

/// Lower a word design to gates. A width-`w` input `x` becomes input bits
/// `x[0]` (LSB) through `x[w-1]`; width-1 inputs keep their plain name.
/// Role bit indices count up per role in declaration order, LSB first.
/// Outputs are expanded the same way, via named BUF nets.
pub fn lower_to_gates(design: &WordDesign) -> Result<Netlist, LowerError> {
    design.validate()?;
    let mut n = Netlist::new();
    let mut role_counts = [0u32; 3];
    let role_slot = |r: PortRole| match r {
        PortRole::Secret => 0,
        PortRole::LockingKey => 1,
        PortRole::Operational => 2,
    };
    // per declared input, its bit nets LSB-first
    let mut input_bits: Vec<Vec<NetId>> = Vec::with_capacity(design.inputs.len());
    for inp in &design.inputs {
        let slot = role_slot(inp.role);
        let mut bits = Vec::with_capacity(inp.width as usize);
        for j in 0..inp.width {
            let name = bit_name(&inp.name, j, inp.width);
            bits.push(n.add_input(name, inp.role, role_counts[slot]));
            role_counts[slot] += 1;
        }
        input_bits.push(bits);
    }

    let mut rails: Vec<Vec<NetId>> = Vec::with_capacity(design.nodes.len());
    for node in &design.nodes {
        let r = match node {
            WordExpr::Const { width, value } => (0..*width)
                .map(|j| {
                    let kind = if value >> j & 1 == 1 { GateKind::Const1 } else { GateKind::Const0 };
                    n.add_gate(kind, vec![])
                })
                .collect(),
            WordExpr::Input(i) => input_bits[*i].clone(),
            WordExpr::Bin { op, a, b } => {
                let (a, b) = (&rails[a.index()], &rails[b.index()]);
                match op {
                    BinOp::Add => ripple_add(&mut n, a, b, false),
                    BinOp::Sub => {
                        // a - b = a + !b + 1
                        let nb: Vec<NetId> =
                            b.iter().map(|&x| n.add_gate(GateKind::Not, vec![x])).collect();
                        ripple_add(&mut n, a, &nb, true)
                    }
                    BinOp::BitXor => bitwise(&mut n, GateKind::Xor, a, b),
                    BinOp::BitAnd => bitwise(&mut n, GateKind::And, a, b),
                    BinOp::BitOr => bitwise(&mut n, GateKind::Or, a, b),
                }
            }
            WordExpr::Cmp { op, a, b } => {
                let (a, b) = (&rails[a.index()], &rails[b.index()]);
                let gt = greater_than(&mut n, a, b);
                vec![match op {
                    CmpOp::Gt => gt,
                    CmpOp::Le => n.add_gate(GateKind::Not, vec![gt]),
                    CmpOp::Eq => {
                        let eqs: Vec<NetId> = a
                            .iter()
                            .zip(b)
                            .map(|(&x, &y)| n.add_gate(GateKind::Xnor, vec![x, y]))
                            .collect();
                        and_tree(&mut n, &eqs)
                    }
                }]
            }
            WordExpr::Mux { cond, then_, else_ } => {
                let sel = rails[cond.index()][0];
                let (t, e) = (&rails[then_.index()], &rails[else_.index()]);
                // MUX2 picks its first data input when sel=0
                e.iter()
                    .zip(t)
                    .map(|(&e, &t)| n.add_gate(GateKind::Mux2, vec![sel, e, t]))
                    .collect()
            }
        };
        rails.push(r);
    }

    for (name, id) in &design.outputs {
        let bits = &rails[id.index()];
        let width = bits.len() as u32;
        for (j, &bit) in bits.iter().enumerate() {
            let out = n.fresh_named_net(bit_name(name, j as u32, width));
            n.add_gate_onto(GateKind::Buf, vec![bit], out);
            n.outputs.push(out);
        }
    }
    debug_assert!(n.validate().is_empty());
    Ok(n)
}

fn bit_name(base: &str, j: u32, width: u32) -> String {
    if width == 1 {
        base.to_string()
    } else {
        format!("{base}[{j}]")
    }
}

fn bitwise(n: &mut Netlist, kind: GateKind, a: &[NetId], b: &[NetId]) -> Vec<NetId> {
    a.iter().zip(b).map(|(&x, &y)| n.add_gate(kind, vec![x, y])).collect()
}

/// Ripple-carry sum of equal-width operands, discarding the final carry.
fn ripple_add(n: &mut Netlist, a: &[NetId], b: &[NetId], carry_in: bool) -> Vec<NetId> {
    let mut carry =
        n.add_gate(if carry_in { GateKind::Const1 } else { GateKind::Const0 }, vec![]);
    let mut sum = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        let xy = n.add_gate(GateKind::Xor, vec![x, y]);
        sum.push(n.add_gate(GateKind::Xor, vec![xy, carry]));
        let both = n.add_gate(GateKind::And, vec![x, y]);
        let prop = n.add_gate(GateKind::And, vec![xy, carry]);
        carry = n.add_gate(GateKind::Or, vec![both, prop]);
    }
    sum
}

/// Unsigned a > b, scanning from the most significant bit.
fn greater_than(n: &mut Netlist, a: &[NetId], b: &[NetId]) -> NetId {
    let mut gt = n.add_gate(GateKind::Const0, vec![]);
    let mut eq = n.add_gate(GateKind::Const1, vec![]);
    for (&x, &y) in a.iter().zip(b).rev() {
        let ny = n.add_gate(GateKind::Not, vec![y]);
        let here = n.add_gate(GateKind::And, vec![x, ny]);
        let win = n.add_gate(GateKind::And, vec![eq, here]);
        gt = n.add_gate(GateKind::Or, vec![gt, win]);
        let same = n.add_gate(GateKind::Xnor, vec![x, y]);
        eq = n.add_gate(GateKind::And, vec![eq, same]);
    }
    gt
}

fn and_tree(n: &mut Netlist, bits: &[NetId]) -> NetId {
    match bits {
        [] => n.add_gate(GateKind::Const1, vec![]),
        [one] => *one,
        _ => {
            let mid = bits.len() / 2;
            let l = and_tree(n, &bits[..mid]);
            let r = and_tree(n, &bits[mid..]);
            n.add_gate(GateKind::And, vec![l, r])
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::sim::simulate;
    use crate::word::{word_eval, WordDesign};

    use super::super::mask;
    use super::*;

    /// Drive the lowered netlist with word values and read words back.
    fn gate_eval(netlist: &Netlist, design: &WordDesign, asg: &HashMap<String, u64>) -> Vec<u64> {
        let inputs: Vec<bool> = netlist
            .inputs
            .iter()
            .map(|p| {
                let (base, j) = split_bit_name(&p.name);
                (asg[base] >> j) & 1 == 1
            })
            .collect();
        let outs = simulate(netlist, &inputs).unwrap();
        let mut words: Vec<u64> = Vec::new();
        let mut idx = 0;
        for (_, id) in &design.outputs {
            let w = design.width(*id);
            let mut v = 0u64;
            for j in 0..w {
                v |= (outs[idx + j as usize] as u64) << j;
            }
            words.push(v);
            idx += w as usize;
        }
        words
    }

    fn split_bit_name(name: &str) -> (&str, u32) {
        match name.find('[') {
            Some(p) => (&name[..p], name[p + 1..name.len() - 1].parse().unwrap()),
            None => (name, 0),
        }
    }

    #[test]
    fn four_bit_addition() {
        let mut d = WordDesign::new();
        let a = d.add_input("a", 4, PortRole::Operational);
        let b = d.add_input("b", 4, PortRole::Operational);
        let s = d.bin(BinOp::Add, a, b);
        d.output("s", s);
        let n = lower_to_gates(&d).unwrap();
        let mut asg = HashMap::new();
        asg.insert("a".to_string(), 0b0011);
        asg.insert("b".to_string(), 0b0101);
        assert_eq!(gate_eval(&n, &d, &asg), vec![0b1000]);
    }

    #[test]
    fn three_bit_greater_than() {
        let mut d = WordDesign::new();
        let a = d.add_input("a", 3, PortRole::Operational);
        let b = d.add_input("b", 3, PortRole::Operational);
        let g = d.cmp(CmpOp::Gt, a, b);
        d.output("g", g);
        let n = lower_to_gates(&d).unwrap();
        let mut asg = HashMap::new();
        asg.insert("a".to_string(), 5);
        asg.insert("b".to_string(), 2);
        assert_eq!(gate_eval(&n, &d, &asg), vec![1]);
    }

    #[test]
    fn zero_width_rejected() {
        let mut d = WordDesign::new();
        let c = d.push(WordExpr::Const { width: 0, value: 0 });
        d.output("c", c);
        assert!(matches!(lower_to_gates(&d), Err(LowerError::Invalid(_))));
    }

    #[test]
    fn gate_simulation_matches_word_interpreter() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x10E);
        for case in 0..1000 {
            let d = super::super::lock::tests::random_design(&mut rng, 1, 8);
            let n = lower_to_gates(&d).unwrap();
            for _ in 0..4 {
                let asg: HashMap<String, u64> = d
                    .inputs
                    .iter()
                    .map(|inp| (inp.name.clone(), rng.gen::<u64>() & mask(inp.width)))
                    .collect();
                let want: Vec<u64> =
                    word_eval(&d, &asg).unwrap().into_iter().map(|(_, v)| v).collect();
                assert_eq!(gate_eval(&n, &d, &asg), want, "case {case} asg {asg:?}");
            }
        }
    }
}
