//! Leakage decision engine: per-secret-bit path sensitization queries under
//! an attack scenario, classified as detected / secure / not-decided.

mod dualrail;
mod exact;

pub use dualrail::LeakageQuery;

use crate::netlist::{Netlist, PortRole};
use crate::sat::{ExhaustedBound, SolveBudget, SolveStats};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Attack scenario deriving the controllable/unknown input partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Attacker sets every non-secret input.
    SetAll,
    /// Attacker sets only the locking-key inputs.
    SetLlKey,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SetAll => "set-all",
            Scenario::SetLlKey => "set-ll-key",
        }
    }
}

/// Input partition for one tested secret bit. Indices refer to the
/// netlist's declared primary-input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub controllable: Vec<usize>,
    pub unknown: Vec<usize>,
    pub tested: usize,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("input index {0} is not a secret input")]
    NotASecret(usize),
}

impl Scenario {
    /// Partition the inputs for testing the given secret input (by declared
    /// input index). Untested secret bits are always unknown.
    pub fn partition(self, netlist: &Netlist, tested: usize) -> Result<Partition, ScenarioError> {
        if netlist.inputs.get(tested).map(|p| p.role) != Some(PortRole::Secret) {
            return Err(ScenarioError::NotASecret(tested));
        }
        let mut controllable = Vec::new();
        let mut unknown = Vec::new();
        for (i, p) in netlist.inputs.iter().enumerate() {
            if i == tested {
                continue;
            }
            let is_controllable = match self {
                Scenario::SetAll => p.role != PortRole::Secret,
                Scenario::SetLlKey => p.role == PortRole::LockingKey,
            };
            if is_controllable {
                controllable.push(i);
            } else {
                unknown.push(i);
            }
        }
        Ok(Partition { controllable, unknown, tested })
    }
}

/// A detection witness: the controllable pattern, the leaking output, and
/// the read polarity (output = secret xor polarity).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Values for the partition's controllable inputs, in partition order.
    pub controllable: Vec<bool>,
    /// Index into the netlist's output list.
    pub output: usize,
    pub polarity: bool,
}

impl Witness {
    /// Hex encoding of the controllable pattern, first bit most significant.
    pub fn controllable_hex(&self) -> String {
        if self.controllable.is_empty() {
            return String::new();
        }
        let mut bits = self.controllable.clone();
        while bits.len() % 4 != 0 {
            bits.insert(0, false);
        }
        bits.chunks(4)
            .map(|c| {
                let v = c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
                char::from_digit(v as u32, 16).unwrap()
            })
            .collect()
    }
}

/// Per-bit classification outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum VerdictClass {
    Detected(Witness),
    Secure,
    NotDecided(ExhaustedBound),
}

impl VerdictClass {
    pub fn label(&self) -> &'static str {
        match self {
            VerdictClass::Detected(_) => "DT",
            VerdictClass::Secure => "S",
            VerdictClass::NotDecided(_) => "ND",
        }
    }
}

/// Verdict plus solver statistics for one (bit, scenario) query.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageVerdict {
    pub class: VerdictClass,
    pub stats: SolveStats,
    /// Which engine produced the verdict; a dual-rail S is only secure
    /// w.r.t. the pessimistic calculus.
    pub mode: AnalysisMode,
}

/// Analysis engine selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisMode {
    /// Pessimistic three-valued reasoning in one SAT query; sound for DT.
    DualRail,
    /// CEGAR exists-forall loop; complete on small unknown sets.
    Exact,
}

impl AnalysisMode {
    pub fn name(self) -> &'static str {
        match self {
            AnalysisMode::DualRail => "dualrail",
            AnalysisMode::Exact => "exact",
        }
    }
}

/// Cap on unknown bits for the exact engine's forall check.
pub const DEFAULT_EXACT_UNKNOWN_CAP: usize = 24;

#[derive(Debug, Error)]
pub enum SensitizeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("netlist is sequential; unroll before classification")]
    Sequential,
    #[error("exact mode: {0} unknown bits exceed the cap of {1}")]
    UnknownCapExceeded(usize, usize),
    #[error("internal soundness failure: extracted witness failed re-verification")]
    WitnessVerificationFailed,
}

/// Build the dual-rail sensitization CNF for one secret bit. The returned
/// query exposes the controllable-input and output-rail literals needed to
/// decode a model into a witness.
pub fn build_leakage_query(
    netlist: &Netlist,
    secret_input: usize,
    scenario: Scenario,
) -> Result<LeakageQuery, SensitizeError> {
    if !netlist.is_combinational() {
        return Err(SensitizeError::Sequential);
    }
    let partition = scenario.partition(netlist, secret_input)?;
    dualrail::build_query(netlist, &partition)
}

/// Classify one secret bit under a scenario.
pub fn classify_bit(
    netlist: &Netlist,
    secret_input: usize,
    scenario: Scenario,
    mode: AnalysisMode,
    budget: SolveBudget,
) -> Result<LeakageVerdict, SensitizeError> {
    if !netlist.is_combinational() {
        return Err(SensitizeError::Sequential);
    }
    let partition = scenario.partition(netlist, secret_input)?;
    let mut verdict = match mode {
        AnalysisMode::DualRail => dualrail::classify(netlist, &partition, budget)?,
        AnalysisMode::Exact => {
            exact::classify(netlist, &partition, budget, DEFAULT_EXACT_UNKNOWN_CAP)?
        }
    };
    verdict.mode = mode;
    if let VerdictClass::Detected(ref w) = verdict.class {
        if !verify_witness(netlist, &partition, w) {
            return Err(SensitizeError::WitnessVerificationFailed);
        }
    }
    Ok(verdict)
}

/// Classify every secret bit, in declared bit order. Per-bit errors are
/// collected; the run continues.
pub fn classify_all_bits(
    netlist: &Netlist,
    scenario: Scenario,
    mode: AnalysisMode,
    budget: SolveBudget,
) -> Vec<(usize, Result<LeakageVerdict, SensitizeError>)> {
    let mut secrets: Vec<(u32, usize)> = netlist
        .inputs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.role == PortRole::Secret)
        .map(|(i, p)| (p.bit, i))
        .collect();
    secrets.sort();
    secrets
        .into_iter()
        .map(|(_, idx)| (idx, classify_bit(netlist, idx, scenario, mode, budget)))
        .collect()
}

/// Re-verify a detection witness by simulation: exhaustive over the unknown
/// inputs when they fit in 16 bits, 10^4 seeded random completions otherwise.
pub fn verify_witness(netlist: &Netlist, partition: &Partition, witness: &Witness) -> bool {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let mut inputs = vec![false; netlist.inputs.len()];
    for (k, &idx) in partition.controllable.iter().enumerate() {
        inputs[idx] = witness.controllable[k];
    }
    let nu = partition.unknown.len();
    let check = |inputs: &mut Vec<bool>| -> bool {
        for secret in [false, true] {
            inputs[partition.tested] = secret;
            let outs = match crate::sim::simulate(netlist, inputs) {
                Ok(o) => o,
                Err(_) => return false,
            };
            if outs[witness.output] != (secret ^ witness.polarity) {
                return false;
            }
        }
        true
    };

    if nu <= 16 {
        for mask in 0..(1u64 << nu) {
            for (k, &idx) in partition.unknown.iter().enumerate() {
                inputs[idx] = (mask >> k) & 1 == 1;
            }
            if !check(&mut inputs) {
                return false;
            }
        }
        true
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..10_000 {
            for &idx in &partition.unknown {
                inputs[idx] = rng.gen_bool(0.5);
            }
            if !check(&mut inputs) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{GateKind, Netlist};

    fn three_role_netlist() -> Netlist {
        let mut n = Netlist::new();
        let s0 = n.add_input("s0", PortRole::Secret, 0);
        let _s1 = n.add_input("s1", PortRole::Secret, 1);
        let _k = n.add_input("k", PortRole::LockingKey, 0);
        let _op = n.add_input("op", PortRole::Operational, 0);
        let o = n.add_gate(GateKind::Buf, vec![s0]);
        n.outputs.push(o);
        n
    }

    #[test]
    fn set_all_partition() {
        let n = three_role_netlist();
        let p = Scenario::SetAll.partition(&n, 0).unwrap();
        assert_eq!(p.controllable, vec![2, 3]);
        assert_eq!(p.unknown, vec![1]);
        assert_eq!(p.tested, 0);
    }

    #[test]
    fn set_ll_key_partition() {
        let n = three_role_netlist();
        let p = Scenario::SetLlKey.partition(&n, 0).unwrap();
        assert_eq!(p.controllable, vec![2]);
        assert_eq!(p.unknown, vec![1, 3]);
    }

    #[test]
    fn non_secret_rejected() {
        let n = three_role_netlist();
        assert!(Scenario::SetAll.partition(&n, 2).is_err());
    }

    #[test]
    fn witness_hex_is_msb_first() {
        let w = Witness { controllable: vec![true, false, true, true], output: 0, polarity: false };
        assert_eq!(w.controllable_hex(), "b");
    }
}
