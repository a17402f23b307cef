//! Enumeration-based ground-truth leakage oracle for small instances.

use super::simulate;
use crate::netlist::Netlist;
use crate::sensitize::{Scenario, Witness};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("too many controllable bits: {0} (limit 20)")]
    TooManyControllable(usize),
    #[error("too many unknown bits: {0} (limit 16)")]
    TooManyUnknown(usize),
    #[error("secret input index {0} out of range or not a secret")]
    BadSecretBit(usize),
    #[error("netlist is sequential; unroll before analysis")]
    Sequential,
}

/// Oracle verdict: either a detection with the lexicographically smallest
/// witness, or secure. The oracle never gives up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteVerdict {
    Detected(Witness),
    Secure,
}

/// Decide by full enumeration whether the tested secret bit is a hard leak:
/// some controllable assignment makes some output a deterministic copy (or
/// complement) of the secret for every completion of the unknown inputs.
pub fn brute_force_leakage(
    netlist: &Netlist,
    secret_input: usize,
    scenario: Scenario,
) -> Result<BruteVerdict, BruteForceError> {
    if !netlist.is_combinational() {
        return Err(BruteForceError::Sequential);
    }
    let part = scenario
        .partition(netlist, secret_input)
        .map_err(|_| BruteForceError::BadSecretBit(secret_input))?;
    let nc = part.controllable.len();
    let nu = part.unknown.len();
    if nc > 20 {
        return Err(BruteForceError::TooManyControllable(nc));
    }
    if nu > 16 {
        return Err(BruteForceError::TooManyUnknown(nu));
    }

    let n_out = netlist.outputs.len();
    let mut inputs = vec![false; netlist.inputs.len()];
    for c_mask in 0..(1u64 << nc) {
        set_lex(&mut inputs, &part.controllable, c_mask, nc);
        // candidate polarity per output, None once ruled out
        let mut candidate: Vec<Option<bool>> = vec![None; n_out];
        let mut alive = vec![true; n_out];
        let mut any_alive = true;
        for u_mask in 0..(1u64 << nu) {
            if !any_alive {
                break;
            }
            set_lex(&mut inputs, &part.unknown, u_mask, nu);
            inputs[part.tested] = false;
            let out0 = simulate(netlist, &inputs).expect("valid inputs");
            inputs[part.tested] = true;
            let out1 = simulate(netlist, &inputs).expect("valid inputs");
            any_alive = false;
            for o in 0..n_out {
                if !alive[o] {
                    continue;
                }
                // out = secret xor b requires out0 = b and out1 = !b
                if out1[o] == out0[o] {
                    alive[o] = false;
                    continue;
                }
                match candidate[o] {
                    None => candidate[o] = Some(out0[o]),
                    Some(b) if b == out0[o] => {}
                    Some(_) => {
                        alive[o] = false;
                        continue;
                    }
                }
                any_alive = true;
            }
        }
        if let Some(o) = (0..n_out).find(|&o| alive[o] && candidate[o].is_some()) {
            let controllable = lex_bits(c_mask, nc);
            return Ok(BruteVerdict::Detected(Witness {
                controllable,
                output: o,
                polarity: candidate[o].unwrap(),
            }));
        }
    }
    Ok(BruteVerdict::Secure)
}

/// Write `mask` into `inputs` at the given positions, with position 0 as the
/// most significant bit (so ascending masks enumerate lexicographic order).
fn set_lex(inputs: &mut [bool], positions: &[usize], mask: u64, n: usize) {
    for (i, &pos) in positions.iter().enumerate() {
        inputs[pos] = (mask >> (n - 1 - i)) & 1 == 1;
    }
}

fn lex_bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (mask >> (n - 1 - i)) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{GateKind, Netlist, PortRole};

    #[test]
    fn direct_wire_is_detected() {
        let mut n = Netlist::new();
        let s = n.add_input("secret", PortRole::Secret, 0);
        let _c = n.add_input("c", PortRole::Operational, 0);
        let o = n.add_gate(GateKind::Buf, vec![s]);
        n.outputs.push(o);
        let v = brute_force_leakage(&n, 0, Scenario::SetAll).unwrap();
        match v {
            BruteVerdict::Detected(w) => {
                assert_eq!(w.polarity, false);
                assert_eq!(w.controllable, vec![false]); // lexicographically smallest
            }
            BruteVerdict::Secure => panic!("direct wire must leak"),
        }
    }

    #[test]
    fn unknown_mask_is_secure() {
        // out = secret xor u, u unknown in both scenarios (another secret)
        let mut n = Netlist::new();
        let s = n.add_input("secret0", PortRole::Secret, 0);
        let u = n.add_input("secret1", PortRole::Secret, 1);
        let o = n.add_gate(GateKind::Xor, vec![s, u]);
        n.outputs.push(o);
        let v = brute_force_leakage(&n, 0, Scenario::SetAll).unwrap();
        assert_eq!(v, BruteVerdict::Secure);
    }

    #[test]
    fn complement_leak_reports_polarity() {
        let mut n = Netlist::new();
        let s = n.add_input("secret", PortRole::Secret, 0);
        let o = n.add_gate(GateKind::Not, vec![s]);
        n.outputs.push(o);
        match brute_force_leakage(&n, 0, Scenario::SetAll).unwrap() {
            BruteVerdict::Detected(w) => assert_eq!(w.polarity, true),
            BruteVerdict::Secure => panic!("complement must leak"),
        }
    }

    #[test]
    fn size_bounds_enforced() {
        let mut n = Netlist::new();
        let s = n.add_input("secret", PortRole::Secret, 0);
        for i in 0..21 {
            n.add_input(format!("c{i}"), PortRole::Operational, i);
        }
        let o = n.add_gate(GateKind::Buf, vec![s]);
        n.outputs.push(o);
        assert!(matches!(
            brute_force_leakage(&n, 0, Scenario::SetAll),
            Err(BruteForceError::TooManyControllable(21))
        ));
    }
}
