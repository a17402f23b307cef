//! Gate-level locking transformations: XOR/XNOR key-gate insertion and
//! key-controlled multiplexer insertion, with correct-key bookkeeping and
//! acyclicity enforcement.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{topo_order, GateKind, NetId, Netlist, PortRole};

mod json;

pub use json::{locked_to_json, parse_locked_json, LockedJsonError};

/// Which locking transformation to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// XOR/XNOR key gates spliced into nets.
    Epic,
    /// Key-controlled MUX2 gates with a decoy second input.
    Dmux,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Epic => "epic",
            Scheme::Dmux => "dmux",
        }
    }
}

/// Requested key length, relative or absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeySize {
    /// Percentage of the maximum number of placement locations, in (0, 100].
    /// The resulting count is rounded half-even and floored at 1.
    Percent(f64),
    Absolute(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockingConfig {
    pub scheme: Scheme,
    pub key_size: KeySize,
    pub seed: u64,
    /// Resampling budget per MUX insertion before giving up (DMUX only).
    pub max_retries: usize,
}

impl LockingConfig {
    pub fn new(scheme: Scheme, key_size: KeySize, seed: u64) -> Self {
        Self { scheme, key_size, seed, max_retries: 32 }
    }
}

/// Where one key bit went: the scheme, the gate added for it, and the
/// net(s) it taps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBitProvenance {
    pub scheme: Scheme,
    pub gate_kind: GateKind,
    /// Index of the inserted gate in the locked netlist.
    pub gate: u32,
    /// The net that was cut (XOR/XNOR) or the genuine net (MUX).
    pub host_net: u32,
    /// The decoy net for MUX insertions.
    pub decoy_net: Option<u32>,
}

/// A locked netlist together with its correct key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockedNetlist {
    pub netlist: Netlist,
    /// Correct key; bit i belongs to `key_inputs[i]`.
    pub key: Vec<bool>,
    pub key_inputs: Vec<NetId>,
    pub provenance: Vec<KeyBitProvenance>,
}

impl LockedNetlist {
    pub fn key_string(&self) -> String {
        self.key.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GateLockError {
    #[error("invalid netlist: {0}")]
    Invalid(String),
    #[error("requested key length {requested} exceeds the {available} eligible locations")]
    TooManyBits { requested: usize, available: usize },
    #[error("key length must be at least 1")]
    EmptyKey,
    #[error("key percentage {0} outside (0, 100]")]
    BadPercent(f64),
    #[error("netlist has fewer than 2 eligible nets for mux insertion")]
    TooFewNets,
    #[error("retry budget exhausted after placing {placed} of {requested} key bits")]
    CapacityExhausted { placed: usize, requested: usize },
    #[error("key length mismatch: got {got}, netlist has {want} key bits")]
    KeyLengthMismatch { got: usize, want: usize },
}

/// Nets eligible for key-gate insertion: outputs of combinational gates
/// and primary-input stems, excluding nets already carrying key inputs
/// and constant-driver outputs.
fn eligible_nets(netlist: &Netlist) -> Vec<NetId> {
    let mut nets: Vec<NetId> = netlist
        .inputs
        .iter()
        .filter(|p| p.role != PortRole::LockingKey)
        .map(|p| p.net)
        .collect();
    nets.extend(
        netlist
            .gates
            .iter()
            .filter(|g| !matches!(g.kind, GateKind::Const0 | GateKind::Const1))
            .map(|g| g.output),
    );
    nets
}

/// Number of placement locations the scheme could use on this netlist.
pub fn max_locations(netlist: &Netlist, _scheme: Scheme) -> usize {
    eligible_nets(netlist).len()
}

fn resolve_key_len(size: KeySize, available: usize) -> Result<usize, GateLockError> {
    let n = match size {
        KeySize::Percent(p) => {
            if !(p > 0.0 && p <= 100.0) {
                return Err(GateLockError::BadPercent(p));
            }
            // round half-even, floored at 1
            let exact = p * available as f64 / 100.0;
            let rounded = crate::batch::round_half_even(exact, 0) as usize;
            rounded.max(1)
        }
        KeySize::Absolute(n) => n,
    };
    if n == 0 {
        return Err(GateLockError::EmptyKey);
    }
    if n > available {
        return Err(GateLockError::TooManyBits { requested: n, available });
    }
    Ok(n)
}

fn check_valid(netlist: &Netlist) -> Result<(), GateLockError> {
    let violations = netlist.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(GateLockError::Invalid(violations[0].to_string()))
    }
}

fn next_key_bit_index(netlist: &Netlist) -> u32 {
    netlist
        .inputs_with_role(PortRole::LockingKey)
        .map(|p| p.bit + 1)
        .max()
        .unwrap_or(0)
}

/// Splice an XOR or XNOR key gate into each of `key_len` sampled nets.
/// The net is cut: its loads are redirected to the key gate's output,
/// whose inputs are the original net and a fresh key input. XOR passes
/// its data input through when the key bit is 0, XNOR when it is 1, so
/// the correct key bit equals the gate-type coin flip.
pub fn epic_lock(netlist: &Netlist, config: &LockingConfig) -> Result<LockedNetlist, GateLockError> {
    check_valid(netlist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let candidates = eligible_nets(netlist);
    let key_len = resolve_key_len(config.key_size, candidates.len())?;
    let sites: Vec<NetId> = {
        let mut pool = candidates;
        pool.shuffle(&mut rng);
        pool.truncate(key_len);
        pool
    };

    let mut locked = netlist.clone();
    let mut key = Vec::with_capacity(key_len);
    let mut key_inputs = Vec::with_capacity(key_len);
    let mut provenance = Vec::with_capacity(key_len);
    let mut bit = next_key_bit_index(netlist);
    for site in sites {
        let inverting: bool = rng.gen();
        let key_net = locked.add_input(format!("lolo_key{bit}"), PortRole::LockingKey, bit);
        bit += 1;
        // new net takes over the cut net's loads
        let fixed = locked.fresh_net();
        for g in locked.gates.iter_mut() {
            for inp in g.inputs.iter_mut() {
                if *inp == site {
                    *inp = fixed;
                }
            }
        }
        for d in locked.dffs.iter_mut() {
            if d.d == site {
                d.d = fixed;
            }
        }
        for o in locked.outputs.iter_mut() {
            if *o == site {
                *o = fixed;
            }
        }
        let kind = if inverting { GateKind::Xnor } else { GateKind::Xor };
        let gate = locked.add_gate_onto(kind, vec![site, key_net], fixed);
        key.push(inverting);
        key_inputs.push(key_net);
        provenance.push(KeyBitProvenance {
            scheme: Scheme::Epic,
            gate_kind: kind,
            gate: gate.0,
            host_net: site.0,
            decoy_net: None,
        });
    }
    debug_assert!(locked.validate().is_empty());
    Ok(LockedNetlist { netlist: locked, key, key_inputs, provenance })
}

/// Insert `key_len` key-controlled MUX2 gates. Each samples a genuine net
/// f1, a distinct decoy net f2, and one load pin of f1; the load is
/// redriven by MUX2(k, f1, f2), so the correct key bit is always 0.
/// Insertions that would close a combinational cycle are resampled, up to
/// `max_retries` times per bit.
pub fn dmux_lock(netlist: &Netlist, config: &LockingConfig) -> Result<LockedNetlist, GateLockError> {
    check_valid(netlist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let candidates = eligible_nets(netlist);
    if candidates.len() < 2 {
        return Err(GateLockError::TooFewNets);
    }
    let key_len = resolve_key_len(config.key_size, candidates.len())?;

    let mut locked = netlist.clone();
    let mut key = Vec::with_capacity(key_len);
    let mut key_inputs = Vec::with_capacity(key_len);
    let mut provenance = Vec::with_capacity(key_len);
    let mut bit = next_key_bit_index(netlist);
    for placed in 0..key_len {
        let mut done = false;
        for _ in 0..=config.max_retries {
            let f1 = candidates[rng.gen_range(0..candidates.len())];
            let f2 = candidates[rng.gen_range(0..candidates.len())];
            if f1 == f2 {
                continue;
            }
            // the load pin: a gate input, dff data pin, or output slot
            let mut loads: Vec<(usize, usize)> = Vec::new();
            for (gi, g) in locked.gates.iter().enumerate() {
                for (pi, &inp) in g.inputs.iter().enumerate() {
                    if inp == f1 {
                        loads.push((gi, pi));
                    }
                }
            }
            let n_gate_loads = loads.len();
            let dff_loads: Vec<usize> =
                locked.dffs.iter().enumerate().filter(|(_, d)| d.d == f1).map(|(i, _)| i).collect();
            let out_loads: Vec<usize> =
                locked.outputs.iter().enumerate().filter(|(_, &o)| o == f1).map(|(i, _)| i).collect();
            let total = n_gate_loads + dff_loads.len() + out_loads.len();
            if total == 0 {
                continue;
            }
            let pick = rng.gen_range(0..total);

            let mut trial = locked.clone();
            let key_net = trial.add_input(format!("lolo_key{bit}"), PortRole::LockingKey, bit);
            let mux_out = trial.add_gate(GateKind::Mux2, vec![key_net, f1, f2]);
            if pick < n_gate_loads {
                let (gi, pi) = loads[pick];
                trial.gates[gi].inputs[pi] = mux_out;
            } else if pick < n_gate_loads + dff_loads.len() {
                trial.dffs[dff_loads[pick - n_gate_loads]].d = mux_out;
            } else {
                trial.outputs[out_loads[pick - n_gate_loads - dff_loads.len()]] = mux_out;
            }
            if topo_order(&trial).is_err() {
                continue;
            }
            key.push(false);
            key_inputs.push(*trial.inputs.last().map(|p| &p.net).unwrap());
            provenance.push(KeyBitProvenance {
                scheme: Scheme::Dmux,
                gate_kind: GateKind::Mux2,
                gate: (trial.gates.len() - 1) as u32,
                host_net: f1.0,
                decoy_net: Some(f2.0),
            });
            locked = trial;
            bit += 1;
            done = true;
            break;
        }
        if !done {
            return Err(GateLockError::CapacityExhausted { placed, requested: key_len });
        }
    }
    debug_assert!(locked.validate().is_empty());
    Ok(LockedNetlist { netlist: locked, key, key_inputs, provenance })
}

pub fn lock(netlist: &Netlist, config: &LockingConfig) -> Result<LockedNetlist, GateLockError> {
    match config.scheme {
        Scheme::Epic => epic_lock(netlist, config),
        Scheme::Dmux => dmux_lock(netlist, config),
    }
}

/// Fix the key inputs to constants, producing a plain netlist with the
/// same remaining interface.
pub fn apply_key(locked: &LockedNetlist, key: &[bool]) -> Result<Netlist, GateLockError> {
    if key.len() != locked.key_inputs.len() {
        return Err(GateLockError::KeyLengthMismatch {
            got: key.len(),
            want: locked.key_inputs.len(),
        });
    }
    let mut n = locked.netlist.clone();
    for (&net, &bit) in locked.key_inputs.iter().zip(key) {
        let pos = n
            .inputs
            .iter()
            .position(|p| p.net == net)
            .expect("key input present in locked netlist");
        n.inputs.remove(pos);
        let kind = if bit { GateKind::Const1 } else { GateKind::Const0 };
        n.add_gate_onto(kind, vec![], net);
    }
    debug_assert!(n.validate().is_empty());
    Ok(n)
}
