//! Exact leakage classification via a CEGAR exists-forall loop: synthesize a
//! controllable pattern against a growing set of unknown-input
//! counterexamples, then verify the candidate with a SAT check on the
//! negation.

use super::{LeakageVerdict, Partition, SensitizeError, VerdictClass, Witness};
use crate::netlist::Netlist;
use crate::sat::{solve, Encoder, ExhaustedBound, Lit, SolveBudget, SolveResult, SolveStats};
use std::collections::HashMap;
use std::time::Instant;

fn lit_value(model: &[bool], l: Lit) -> bool {
    model[(l.var() - 1) as usize] == l.is_positive()
}

/// Encode one two-valued circuit copy with fixed/symbolic inputs.
/// `input_lits[i]` must be set for every primary input.
fn encode_copy(enc: &mut Encoder, netlist: &Netlist, input_lits: &[Lit]) -> Vec<Lit> {
    let mut map: HashMap<crate::netlist::NetId, Lit> = HashMap::new();
    for (i, p) in netlist.inputs.iter().enumerate() {
        map.insert(p.net, input_lits[i]);
    }
    enc.encode(netlist, &mut map);
    netlist.outputs.iter().map(|o| map[o]).collect()
}

struct Synthesis {
    enc: Encoder,
    true_lit: Lit,
    controllable_lits: Vec<Lit>,
    sel: Vec<Lit>,
    pol: Vec<Lit>,
}

impl Synthesis {
    fn new(netlist: &Netlist, partition: &Partition) -> Synthesis {
        let mut enc = Encoder::new();
        let true_lit = enc.constant(true);
        let controllable_lits: Vec<Lit> =
            partition.controllable.iter().map(|_| enc.fresh()).collect();
        let n_out = netlist.outputs.len();
        let sel: Vec<Lit> = (0..n_out).map(|_| enc.fresh()).collect();
        let pol: Vec<Lit> = (0..n_out).map(|_| enc.fresh()).collect();
        enc.cnf.add_clause(sel.clone());
        Synthesis { enc, true_lit, controllable_lits, sel, pol }
    }

    /// Constrain the candidate to leak under one concrete unknown assignment.
    fn add_counterexample(&mut self, netlist: &Netlist, partition: &Partition, unknowns: &[bool]) {
        let false_lit = !self.true_lit;
        let mut input_lits = vec![false_lit; netlist.inputs.len()];
        for (k, &idx) in partition.controllable.iter().enumerate() {
            input_lits[idx] = self.controllable_lits[k];
        }
        for (k, &idx) in partition.unknown.iter().enumerate() {
            input_lits[idx] = if unknowns[k] { self.true_lit } else { false_lit };
        }
        for secret in [false, true] {
            input_lits[partition.tested] = if secret { self.true_lit } else { false_lit };
            let outs = encode_copy(&mut self.enc, netlist, &input_lits);
            for (o, &out) in outs.iter().enumerate() {
                // copy with secret=s must produce pol ^ s at a selected output
                let want = if secret { !self.pol[o] } else { self.pol[o] };
                self.enc.cnf.add_clause(vec![!self.sel[o], !out, want]);
                self.enc.cnf.add_clause(vec![!self.sel[o], out, !want]);
            }
        }
    }
}

fn remaining(budget: SolveBudget, start: Instant, used_conflicts: u64) -> Option<SolveBudget> {
    let wall_ms = match budget.wall_ms {
        None => None,
        Some(total) => {
            let used = start.elapsed().as_millis() as u64;
            if used >= total {
                return None;
            }
            Some(total - used)
        }
    };
    let conflicts = match budget.conflicts {
        None => None,
        Some(total) => {
            if used_conflicts >= total {
                return None;
            }
            Some(total - used_conflicts)
        }
    };
    Some(SolveBudget { wall_ms, conflicts })
}

/// Classify one bit with the exact CEGAR engine.
pub fn classify(
    netlist: &Netlist,
    partition: &Partition,
    budget: SolveBudget,
    unknown_cap: usize,
) -> Result<LeakageVerdict, SensitizeError> {
    let nu = partition.unknown.len();
    if nu > unknown_cap {
        return Err(SensitizeError::UnknownCapExceeded(nu, unknown_cap));
    }
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let mut synthesis = Synthesis::new(netlist, partition);
    synthesis.add_counterexample(netlist, partition, &vec![false; nu]);

    let done = |stats: &mut SolveStats, start: Instant, class: VerdictClass| {
        stats.wall_ms = start.elapsed().as_millis() as u64;
        Ok(LeakageVerdict { class, stats: *stats, mode: super::AnalysisMode::Exact })
    };

    loop {
        let Some(rem) = remaining(budget, start, stats.conflicts) else {
            return done(&mut stats, start, VerdictClass::NotDecided(ExhaustedBound::Conflicts));
        };
        let (result, s) = solve(&synthesis.enc.cnf, rem, &[]);
        stats.conflicts += s.conflicts;
        stats.decisions += s.decisions;
        stats.propagations += s.propagations;
        let model = match result {
            SolveResult::Unsat => return done(&mut stats, start, VerdictClass::Secure),
            SolveResult::Unknown(bound) => {
                return done(&mut stats, start, VerdictClass::NotDecided(bound))
            }
            SolveResult::Sat(model) => model,
        };
        let candidate_c: Vec<bool> =
            synthesis.controllable_lits.iter().map(|&l| lit_value(&model, l)).collect();
        let output = synthesis
            .sel
            .iter()
            .position(|&s| lit_value(&model, s))
            .expect("at-least-one selector clause");
        let polarity = lit_value(&model, synthesis.pol[output]);

        // forall check: does some unknown completion break the candidate?
        let mut check = Encoder::new();
        let t = check.constant(true);
        let f = !t;
        let mut input_lits = vec![f; netlist.inputs.len()];
        for (k, &idx) in partition.controllable.iter().enumerate() {
            input_lits[idx] = if candidate_c[k] { t } else { f };
        }
        let unknown_lits: Vec<Lit> = partition.unknown.iter().map(|_| check.fresh()).collect();
        for (k, &idx) in partition.unknown.iter().enumerate() {
            input_lits[idx] = unknown_lits[k];
        }
        input_lits[partition.tested] = f;
        let out_a = encode_copy(&mut check, netlist, &input_lits)[output];
        input_lits[partition.tested] = t;
        let out_b = encode_copy(&mut check, netlist, &input_lits)[output];
        // violation: out_a != polarity or out_b != !polarity
        let va = if polarity { !out_a } else { out_a };
        let vb = if polarity { out_b } else { !out_b };
        check.cnf.add_clause(vec![va, vb]);

        let Some(rem) = remaining(budget, start, stats.conflicts) else {
            return done(&mut stats, start, VerdictClass::NotDecided(ExhaustedBound::Conflicts));
        };
        let (vresult, vs) = solve(&check.cnf, rem, &[]);
        stats.conflicts += vs.conflicts;
        stats.decisions += vs.decisions;
        stats.propagations += vs.propagations;
        match vresult {
            SolveResult::Unsat => {
                return done(
                    &mut stats,
                    start,
                    VerdictClass::Detected(Witness {
                        controllable: candidate_c,
                        output,
                        polarity,
                    }),
                );
            }
            SolveResult::Unknown(bound) => {
                return done(&mut stats, start, VerdictClass::NotDecided(bound))
            }
            SolveResult::Sat(vmodel) => {
                let cex: Vec<bool> =
                    unknown_lits.iter().map(|&l| lit_value(&vmodel, l)).collect();
                synthesis.add_counterexample(netlist, partition, &cex);
            }
        }
    }
}
