//! Campaign execution: build seeded locked variants, classify every secret
//! bit under every requested scenario, and collect the flat verdict table.
//!
//! Determinism contract: jobs are constructed sequentially in a fixed order
//! and executed by an indexed parallel map, so the table is identical for
//! any worker count. With the default conflict-only budget the verdicts
//! themselves are also machine-independent.

use super::table::VerdictRow;
use super::{BatchScheme, BatchSpec};
use crate::benchgen::{gen_benchmark, GenDesign, GenError};
use crate::gatelock::{
    apply_key, lock, GateLockError, KeySize, LockedNetlist, LockingConfig, Scheme,
};
use crate::netlist::{unroll, Netlist, PortRole, UnrollError};
use crate::sensitize::{classify_all_bits, VerdictClass};
use crate::sim::{equivalence_check, EquivMethod};
use crate::word::{assure_lock, lower_to_gates, LockError, LowerError, WordDesign};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("batch needs at least 1 variant")]
    ZeroVariants,
    #[error("no schemes requested")]
    NoSchemes,
    #[error("no scenarios requested")]
    NoScenarios,
    #[error("scheme {0} needs at least one key size")]
    NoKeySizes(&'static str),
    #[error("the assure scheme needs a word-level benchmark, {0:?} is gate-level")]
    AssureNeedsWordDesign(String),
    #[error(transparent)]
    Benchmark(#[from] GenError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Unroll(#[from] UnrollError),
    #[error(transparent)]
    GateLock(#[from] GateLockError),
    #[error(transparent)]
    AssureLock(#[from] LockError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// A variant that could not be generated; excluded from verdict rows and
/// from aggregation denominators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantFailure {
    pub variant_id: String,
    pub seed: u64,
    pub group: String,
    pub error: String,
}

/// Outcome of the embedded control experiments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSummary {
    /// The unlocked design classified all-S under every requested scenario.
    pub unlocked_all_secure: bool,
    /// Per (scheme, key size) group: applying the correct key to the first
    /// variant restores a circuit equivalent to the unlocked design.
    pub correct_key_equivalent: Vec<(String, bool)>,
}

/// A completed campaign: the verdict table in deterministic order, the
/// generation failures, and the control results.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRun {
    pub rows: Vec<VerdictRow>,
    pub failures: Vec<VariantFailure>,
    pub controls: ControlSummary,
}

/// One classification work item: a prepared combinational netlist plus the
/// row metadata it will be recorded under.
struct Job {
    variant_id: String,
    seed: u64,
    scheme: String,
    key_size: String,
    netlist: Netlist,
    is_control: bool,
}

fn key_size_label(size: KeySize) -> String {
    match size {
        KeySize::Percent(p) => {
            if p.fract() == 0.0 {
                format!("{}%", p as u64)
            } else {
                format!("{p}%")
            }
        }
        KeySize::Absolute(n) => n.to_string(),
    }
}

fn variant_id(scheme: &str, size: Option<KeySize>, v: usize) -> String {
    match size {
        Some(s) => format!("{scheme}-{}-v{v:03}", key_size_label(s).replace('%', "pct")),
        None => format!("{scheme}-v{v:03}"),
    }
}

/// The design with no locking applied: already-locked benchmarks are
/// reduced to their correct-key circuit.
fn unlocked_netlist(design: &GenDesign) -> Result<Netlist, BatchError> {
    Ok(match design {
        GenDesign::Gate(n) => n.clone(),
        GenDesign::Word(w) => lower_to_gates(w)?,
        GenDesign::Locked(l) => apply_key(l, &l.key)?,
    })
}

/// Make a netlist classification-ready: sequential designs are expanded to
/// `depth` time frames, combinational ones pass through.
fn prep(netlist: Netlist, depth: usize) -> Result<Netlist, BatchError> {
    if netlist.is_combinational() {
        Ok(netlist)
    } else {
        Ok(unroll(&netlist, depth)?)
    }
}

/// View a lowered locked word design as a gate-level locked netlist, so the
/// generic correct-key machinery applies. The flat key is the concatenation
/// of each key input's bits, LSB first, matching the lowering's bit order.
fn assure_as_locked(
    locked_word: &WordDesign,
    key: &crate::word::AssureKey,
) -> Result<LockedNetlist, BatchError> {
    let netlist = lower_to_gates(locked_word)?;
    let values: std::collections::HashMap<String, u64> = key.assignment().into_iter().collect();
    let mut bits = Vec::new();
    let mut key_inputs = Vec::new();
    for inp in &locked_word.inputs {
        if inp.role != PortRole::LockingKey {
            continue;
        }
        let v = values[&inp.name];
        for j in 0..inp.width {
            bits.push((v >> j) & 1 == 1);
        }
    }
    for p in &netlist.inputs {
        if p.role == PortRole::LockingKey {
            key_inputs.push(p.net);
        }
    }
    debug_assert_eq!(bits.len(), key_inputs.len());
    Ok(LockedNetlist { netlist, key: bits, key_inputs, provenance: Vec::new() })
}

/// Correct-key transparency check: exhaustive over shared inputs when they
/// fit, complete SAT miter otherwise.
fn correct_key_restores(unlocked: &Netlist, keyed: &Netlist, depth: usize) -> bool {
    let (a, b) = match (prep(unlocked.clone(), depth), prep(keyed.clone(), depth)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return false,
    };
    let method = if a.inputs.len() <= 16 { EquivMethod::Exhaustive } else { EquivMethod::SatMiter };
    matches!(equivalence_check(&a, &b, method), Ok(r) if r.is_equal())
}

/// Run a full campaign. The verdict table always begins with the embedded
/// unlocked-control rows (variant `control-unlocked`, scheme `none`).
pub fn run_batch(spec: &BatchSpec) -> Result<BatchRun, BatchError> {
    if spec.variants == 0 {
        return Err(BatchError::ZeroVariants);
    }
    if spec.schemes.is_empty() {
        return Err(BatchError::NoSchemes);
    }
    if spec.scenarios.is_empty() {
        return Err(BatchError::NoScenarios);
    }
    for &s in &spec.schemes {
        if matches!(s, BatchScheme::Epic | BatchScheme::Dmux) && spec.key_sizes.is_empty() {
            return Err(BatchError::NoKeySizes(s.name()));
        }
    }

    let design = gen_benchmark(&spec.benchmark)?;
    let unlocked = unlocked_netlist(&design)?;
    let unlocked_ready = prep(unlocked.clone(), spec.unroll)?;

    let mut jobs: Vec<Job> = Vec::new();
    let mut failures: Vec<VariantFailure> = Vec::new();
    let mut correct_key_equivalent: Vec<(String, bool)> = Vec::new();

    jobs.push(Job {
        variant_id: "control-unlocked".to_string(),
        seed: spec.base_seed,
        scheme: "none".to_string(),
        key_size: "-".to_string(),
        netlist: unlocked_ready.clone(),
        is_control: true,
    });

    for &scheme in &spec.schemes {
        match scheme {
            BatchScheme::None => {
                // The plain design has no seed dependence; one variant.
                jobs.push(Job {
                    variant_id: variant_id("none", None, 0),
                    seed: spec.base_seed,
                    scheme: "none".to_string(),
                    key_size: "-".to_string(),
                    netlist: unlocked_ready.clone(),
                    is_control: false,
                });
            }
            BatchScheme::Epic | BatchScheme::Dmux => {
                let gate_scheme =
                    if scheme == BatchScheme::Epic { Scheme::Epic } else { Scheme::Dmux };
                for &size in &spec.key_sizes {
                    let group = format!("{}/{}", scheme.name(), key_size_label(size));
                    let mut checked_key = false;
                    for v in 0..spec.variants {
                        let seed = spec.base_seed + v as u64;
                        let id = variant_id(scheme.name(), Some(size), v);
                        let config = LockingConfig::new(gate_scheme, size, seed);
                        let locked = match lock(&unlocked, &config) {
                            Ok(l) => l,
                            Err(e) => {
                                failures.push(VariantFailure {
                                    variant_id: id,
                                    seed,
                                    group: group.clone(),
                                    error: e.to_string(),
                                });
                                continue;
                            }
                        };
                        if !checked_key {
                            checked_key = true;
                            let ok = apply_key(&locked, &locked.key)
                                .map(|keyed| correct_key_restores(&unlocked, &keyed, spec.unroll))
                                .unwrap_or(false);
                            correct_key_equivalent.push((group.clone(), ok));
                        }
                        jobs.push(Job {
                            variant_id: id,
                            seed,
                            scheme: scheme.name().to_string(),
                            key_size: key_size_label(size),
                            netlist: prep(locked.netlist, spec.unroll)?,
                            is_control: false,
                        });
                    }
                }
            }
            BatchScheme::Assure => {
                let word = match &design {
                    GenDesign::Word(w) => w,
                    _ => return Err(BatchError::AssureNeedsWordDesign(spec.benchmark.clone())),
                };
                let group = "assure/-".to_string();
                let mut checked_key = false;
                for v in 0..spec.variants {
                    let seed = spec.base_seed + v as u64;
                    let (locked_word, key) = assure_lock(word, &spec.assure_modes, seed)?;
                    let locked = assure_as_locked(&locked_word, &key)?;
                    if !checked_key {
                        checked_key = true;
                        let ok = apply_key(&locked, &locked.key)
                            .map(|keyed| correct_key_restores(&unlocked, &keyed, spec.unroll))
                            .unwrap_or(false);
                        correct_key_equivalent.push((group.clone(), ok));
                    }
                    jobs.push(Job {
                        variant_id: variant_id("assure", None, v),
                        seed,
                        scheme: "assure".to_string(),
                        key_size: "-".to_string(),
                        netlist: prep(locked.netlist, spec.unroll)?,
                        is_control: false,
                    });
                }
            }
        }
    }

    let budget = spec.budget.to_solve_budget();
    let classify = |job: &Job| -> (Vec<VerdictRow>, Vec<VariantFailure>) {
        let mut rows = Vec::new();
        let mut errs = Vec::new();
        for &scenario in &spec.scenarios {
            for (input_idx, result) in classify_all_bits(&job.netlist, scenario, spec.mode, budget)
            {
                let bit = job.netlist.inputs[input_idx].bit;
                match result {
                    Ok(verdict) => {
                        let (output_id, polarity, witness) = match &verdict.class {
                            VerdictClass::Detected(w) => {
                                (Some(w.output), Some(w.polarity), w.controllable_hex())
                            }
                            _ => (None, None, String::new()),
                        };
                        rows.push(VerdictRow {
                            variant_id: job.variant_id.clone(),
                            seed: job.seed,
                            scheme: job.scheme.clone(),
                            key_size: job.key_size.clone(),
                            scenario,
                            mode: spec.mode,
                            bit_index: bit,
                            verdict: verdict.class.label().to_string(),
                            output_id,
                            polarity,
                            witness,
                            solve_ms: verdict.stats.wall_ms,
                            conflicts: verdict.stats.conflicts,
                        });
                    }
                    Err(e) => errs.push(VariantFailure {
                        variant_id: job.variant_id.clone(),
                        seed: job.seed,
                        group: format!("{}/{}", job.scheme, job.key_size),
                        error: format!("bit {bit} under {}: {e}", scenario.name()),
                    }),
                }
            }
        }
        (rows, errs)
    };

    // Indexed parallel map keeps the output in job order: the table is
    // independent of the worker count.
    let run_all = || -> Vec<(Vec<VerdictRow>, Vec<VariantFailure>)> {
        jobs.par_iter().map(&classify).collect()
    };
    let results = match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BatchError::Pool(e.to_string()))?
            .install(run_all),
        None => run_all(),
    };

    let mut rows = Vec::new();
    let mut unlocked_all_secure = true;
    for (job, (job_rows, job_errs)) in jobs.iter().zip(results) {
        if job.is_control {
            unlocked_all_secure &= !job_rows.is_empty() && job_rows.iter().all(|r| r.verdict == "S");
        }
        rows.extend(job_rows);
        failures.extend(job_errs);
    }

    Ok(BatchRun {
        rows,
        failures,
        controls: ControlSummary { unlocked_all_secure, correct_key_equivalent },
    })
}
