//! Dual-rail (pessimistic three-valued) leakage query. Each signal is a
//! pair of rails (p = definitely 1, q = definitely 0); X is (0, 0). Gate
//! semantics mirror the three-valued simulator exactly, so a satisfying
//! model is a hard detection witness.

use super::{LeakageVerdict, Partition, SensitizeError, VerdictClass, Witness};
use crate::netlist::{GateKind, Netlist};
use crate::sat::{solve, Cnf, Encoder, Lit, SolveBudget, SolveResult};

#[derive(Debug, Clone, Copy)]
struct Rails {
    p: Lit,
    q: Lit,
}

/// The assembled query, exposing the variable map needed to read a model.
pub struct LeakageQuery {
    pub cnf: Cnf,
    /// (input index, literal) for each controllable input, partition order.
    pub controllable: Vec<(usize, Lit)>,
    /// Per output: rails of copy A (secret = 0) and copy B (secret = 1).
    pub output_rails: Vec<([Lit; 2], [Lit; 2])>,
}

fn encode_rails(enc: &mut Encoder, kind: GateKind, ins: &[Rails]) -> Rails {
    let and_rails = |enc: &mut Encoder, a: Rails, b: Rails| Rails {
        p: enc.and(a.p, b.p),
        q: enc.or(a.q, b.q),
    };
    let or_rails = |enc: &mut Encoder, a: Rails, b: Rails| Rails {
        p: enc.or(a.p, b.p),
        q: enc.and(a.q, b.q),
    };
    let xor_rails = |enc: &mut Encoder, a: Rails, b: Rails| {
        let t1 = enc.and(a.p, b.q);
        let t2 = enc.and(a.q, b.p);
        let p = enc.or(t1, t2);
        let t3 = enc.and(a.p, b.p);
        let t4 = enc.and(a.q, b.q);
        let q = enc.or(t3, t4);
        Rails { p, q }
    };
    let invert = |r: Rails| Rails { p: r.q, q: r.p };
    match kind {
        GateKind::And => and_rails(enc, ins[0], ins[1]),
        GateKind::Nand => invert(and_rails(enc, ins[0], ins[1])),
        GateKind::Or => or_rails(enc, ins[0], ins[1]),
        GateKind::Nor => invert(or_rails(enc, ins[0], ins[1])),
        GateKind::Xor => xor_rails(enc, ins[0], ins[1]),
        GateKind::Xnor => invert(xor_rails(enc, ins[0], ins[1])),
        GateKind::Not => invert(ins[0]),
        GateKind::Buf => ins[0],
        GateKind::Mux2 => {
            let (sel, a, b) = (ins[0], ins[1], ins[2]);
            let t1 = enc.and(sel.q, a.p);
            let t2 = enc.and(sel.p, b.p);
            let t3 = enc.and(a.p, b.p);
            let t12 = enc.or(t1, t2);
            let p = enc.or(t12, t3);
            let u1 = enc.and(sel.q, a.q);
            let u2 = enc.and(sel.p, b.q);
            let u3 = enc.and(a.q, b.q);
            let u12 = enc.or(u1, u2);
            let q = enc.or(u12, u3);
            Rails { p, q }
        }
        GateKind::Const0 => unreachable!("constants handled by caller"),
        GateKind::Const1 => unreachable!("constants handled by caller"),
    }
}

/// Build the two-copy dual-rail query for one partition.
pub fn build_query(netlist: &Netlist, partition: &Partition) -> Result<LeakageQuery, SensitizeError> {
    if !netlist.is_combinational() {
        return Err(SensitizeError::Sequential);
    }
    let mut enc = Encoder::new();
    let true_lit = enc.constant(true);
    let false_lit = !true_lit;

    // input rails, shared or fixed per partition class
    let mut in_rails_a: Vec<Option<Rails>> = vec![None; netlist.inputs.len()];
    let mut in_rails_b: Vec<Option<Rails>> = vec![None; netlist.inputs.len()];
    let mut controllable = Vec::with_capacity(partition.controllable.len());
    for &i in &partition.controllable {
        let c = enc.fresh();
        let r = Rails { p: c, q: !c };
        in_rails_a[i] = Some(r);
        in_rails_b[i] = Some(r);
        controllable.push((i, c));
    }
    for &i in &partition.unknown {
        let r = Rails { p: false_lit, q: false_lit };
        in_rails_a[i] = Some(r);
        in_rails_b[i] = Some(r);
    }
    in_rails_a[partition.tested] = Some(Rails { p: false_lit, q: true_lit });
    in_rails_b[partition.tested] = Some(Rails { p: true_lit, q: false_lit });

    let order = crate::netlist::topo_order(netlist).expect("valid netlist");
    let encode_copy = |enc: &mut Encoder, in_rails: &[Option<Rails>]| -> Vec<Rails> {
        let mut net_rails: Vec<Option<Rails>> = vec![None; netlist.net_count()];
        for (i, p) in netlist.inputs.iter().enumerate() {
            net_rails[p.net.index()] = in_rails[i];
        }
        for g in &order {
            let gate = &netlist.gates[g.index()];
            let r = match gate.kind {
                GateKind::Const0 => Rails { p: false_lit, q: true_lit },
                GateKind::Const1 => Rails { p: true_lit, q: false_lit },
                kind => {
                    let ins: Vec<Rails> = gate
                        .inputs
                        .iter()
                        .map(|n| net_rails[n.index()].expect("fan-in encoded"))
                        .collect();
                    encode_rails(enc, kind, &ins)
                }
            };
            net_rails[gate.output.index()] = Some(r);
        }
        netlist
            .outputs
            .iter()
            .map(|o| net_rails[o.index()].expect("driven output"))
            .collect()
    };

    let outs_a = encode_copy(&mut enc, &in_rails_a);
    let outs_b = encode_copy(&mut enc, &in_rails_b);

    // assert: some output determinate in both copies with unequal values
    let mut diffs = Vec::with_capacity(outs_a.len());
    for (ra, rb) in outs_a.iter().zip(&outs_b) {
        let d1 = enc.and(ra.p, rb.q);
        let d2 = enc.and(ra.q, rb.p);
        diffs.push(enc.or(d1, d2));
    }
    enc.cnf.add_clause(diffs);

    Ok(LeakageQuery {
        cnf: enc.cnf,
        controllable,
        output_rails: outs_a
            .iter()
            .zip(&outs_b)
            .map(|(a, b)| ([a.p, a.q], [b.p, b.q]))
            .collect(),
    })
}

fn lit_value(model: &[bool], l: Lit) -> bool {
    model[(l.var() - 1) as usize] == l.is_positive()
}

/// Classify one bit with the dual-rail engine.
pub fn classify(
    netlist: &Netlist,
    partition: &Partition,
    budget: SolveBudget,
) -> Result<LeakageVerdict, SensitizeError> {
    let query = build_query(netlist, partition)?;
    let (result, stats) = solve(&query.cnf, budget, &[]);
    let class = match result {
        SolveResult::Unsat => VerdictClass::Secure,
        SolveResult::Unknown(bound) => VerdictClass::NotDecided(bound),
        SolveResult::Sat(model) => {
            let controllable: Vec<bool> =
                query.controllable.iter().map(|&(_, l)| lit_value(&model, l)).collect();
            let output = query
                .output_rails
                .iter()
                .position(|(a, b)| {
                    (lit_value(&model, a[0]) && lit_value(&model, b[1]))
                        || (lit_value(&model, a[1]) && lit_value(&model, b[0]))
                })
                .expect("model satisfies the output disjunction");
            // polarity = value of copy A (secret = 0) at the leaking output
            let polarity = lit_value(&model, query.output_rails[output].0[0]);
            VerdictClass::Detected(Witness { controllable, output, polarity })
        }
    };
    Ok(LeakageVerdict { class, stats, mode: super::AnalysisMode::DualRail })
}
