//! `lockaudit`: lock gate-level or word-level designs, classify secret-bit
//! leakage, and run seeded batch campaigns.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 internal
//! soundness failure (a verdict or control self-check did not hold).

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use lockaudit_core::batch::{
    aggregate, report, run_batch, verdicts_from_csv, verdicts_to_csv, BatchError, BatchSpec,
    VerdictRow,
};
use lockaudit_core::benchgen::{gen_benchmark, GenDesign};
use lockaudit_core::gatelock::{locked_to_json, parse_locked_json, KeySize, LockingConfig, Scheme};
use lockaudit_core::netlist::{emit_json, parse_json, unroll, Netlist};
use lockaudit_core::sat::SolveBudget;
use lockaudit_core::sensitize::{classify_all_bits, AnalysisMode, Scenario, SensitizeError};
use lockaudit_core::sim::{brute_force_leakage, simulate, BruteVerdict};
use lockaudit_core::word::{
    assure_lock, key_to_json, lower_to_gates, parse_word_json, word_to_json, AssureMode,
};
use lockaudit_core::{PortRole, VerdictClass};

#[derive(Parser)]
#[command(name = "lockaudit", version, about = "Logic-locking confidentiality audit toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    SetAll,
    SetLlKey,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Scenario {
        match s {
            ScenarioArg::SetAll => Scenario::SetAll,
            ScenarioArg::SetLlKey => Scenario::SetLlKey,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dualrail,
    Exact,
}

impl From<ModeArg> for AnalysisMode {
    fn from(m: ModeArg) -> AnalysisMode {
        match m {
            ModeArg::Dualrail => AnalysisMode::DualRail,
            ModeArg::Exact => AnalysisMode::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Epic,
    Dmux,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeFlag {
    Const,
    Ops,
    Branch,
}

impl From<ModeFlag> for AssureMode {
    fn from(m: ModeFlag) -> AssureMode {
        match m {
            ModeFlag::Const => AssureMode::Const,
            ModeFlag::Ops => AssureMode::Ops,
            ModeFlag::Branch => AssureMode::Branch,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a built-in benchmark design as JSON.
    Gen {
        /// Benchmark reference, e.g. toy_spn(4,2), fig5_example, passthrough.
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Obfuscate a word-level design's constants, operations and branches.
    AssureLock {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated site classes: const,ops,branch.
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<ModeFlag>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "key-out")]
        key_out: PathBuf,
    },
    /// Insert gate-level key gates (XOR/XNOR splice or decoy multiplexers).
    Lock {
        /// Gate-level netlist or word-level design (lowered automatically).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scheme: SchemeArg,
        /// Key length as a percentage of eligible locations.
        #[arg(long = "key-pct", group = "size", required = true)]
        key_pct: Option<f64>,
        /// Absolute key length in bits.
        #[arg(long = "key-bits", group = "size")]
        key_bits: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify every secret bit of a (locked) netlist under one scenario.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scenario: ScenarioArg,
        #[arg(long)]
        mode: ModeArg,
        /// Wall-clock budget per query in milliseconds.
        #[arg(long = "timeout-ms")]
        timeout_ms: Option<u64>,
        /// Conflict budget per query (default 2000000 when no budget given).
        #[arg(long)]
        conflicts: Option<u64>,
        /// Time-frame expansion depth for sequential designs.
        #[arg(long, default_value_t = 8)]
        unroll: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded campaign described by a batch spec file.
    Batch {
        #[arg(long)]
        spec: PathBuf,
        /// Worker threads, overriding the spec.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Aggregate verdict CSVs from a batch output directory.
    Report {
        #[arg(long = "in-dir")]
        in_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force ground truth for small designs (exhaustive enumeration).
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scenario: ScenarioArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a combinational netlist on one input assignment.
    Sim {
        #[arg(long = "in")]
        input: PathBuf,
        /// JSON object mapping input names to 0/1.
        #[arg(long)]
        inputs: PathBuf,
    },
}

/// Failure category deciding the process exit code.
enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn input_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap distinguishes --help/--version from real usage errors
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal soundness failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(input_err)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input_err)
}

/// Load a gate-level netlist, accepting locked-netlist JSON, plain netlist
/// JSON, or a word-level design (lowered on the fly).
fn load_netlist(path: &Path) -> Result<Netlist, Failure> {
    let bytes = read(path)?;
    if let Ok(locked) = parse_locked_json(&bytes) {
        return Ok(locked.netlist);
    }
    if let Ok(word) = parse_word_json(&bytes) {
        return lower_to_gates(&word).map_err(input_err);
    }
    parse_json(&bytes)
        .map_err(|e| input_err(anyhow!("{}: not a recognized design: {e}", path.display())))
}

fn prep_combinational(netlist: Netlist, depth: usize) -> Result<Netlist, Failure> {
    if netlist.is_combinational() {
        Ok(netlist)
    } else {
        unroll(&netlist, depth).map_err(input_err)
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "-".to_string())
}

fn run(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Gen { name, out } => {
            let design = gen_benchmark(&name).map_err(input_err)?;
            let bytes = match design {
                GenDesign::Gate(n) => emit_json(&n),
                GenDesign::Word(w) => word_to_json(&w).into_bytes(),
                GenDesign::Locked(l) => locked_to_json(&l),
            };
            write(&out, &bytes)
        }
        Cmd::AssureLock { input, modes, seed, out, key_out } => {
            let design = parse_word_json(&read(&input)?).map_err(input_err)?;
            let modes: Vec<AssureMode> = modes.into_iter().map(AssureMode::from).collect();
            let (locked, key) = assure_lock(&design, &modes, seed).map_err(input_err)?;
            write(&out, word_to_json(&locked).as_bytes())?;
            write(&key_out, key_to_json(&key).as_bytes())
        }
        Cmd::Lock { input, scheme, key_pct, key_bits, seed, out } => {
            let netlist = load_netlist(&input)?;
            let size = match (key_pct, key_bits) {
                (Some(p), None) => KeySize::Percent(p),
                (None, Some(b)) => KeySize::Absolute(b),
                _ => unreachable!("clap group enforces exactly one"),
            };
            let scheme = match scheme {
                SchemeArg::Epic => Scheme::Epic,
                SchemeArg::Dmux => Scheme::Dmux,
            };
            let locked = lockaudit_core::gatelock::lock(
                &netlist,
                &LockingConfig::new(scheme, size, seed),
            )
            .map_err(input_err)?;
            write(&out, &locked_to_json(&locked))
        }
        Cmd::Analyze { input, scenario, mode, timeout_ms, conflicts, unroll: depth, out } => {
            let bytes = read(&input)?;
            let locked = parse_locked_json(&bytes)
                .map_err(|e| input_err(anyhow!("{}: {e}", input.display())))?;
            let scheme = locked
                .provenance
                .first()
                .map(|p| p.scheme.name().to_string())
                .unwrap_or_else(|| "-".to_string());
            let key_size = if locked.key.is_empty() {
                "-".to_string()
            } else {
                locked.key.len().to_string()
            };
            let netlist = prep_combinational(locked.netlist, depth)?;
            let budget = match (timeout_ms, conflicts) {
                (None, None) => SolveBudget { wall_ms: None, conflicts: Some(2_000_000) },
                (wall_ms, conflicts) => SolveBudget { wall_ms, conflicts },
            };
            let scenario = Scenario::from(scenario);
            let mode = AnalysisMode::from(mode);
            let mut rows = Vec::new();
            for (idx, result) in classify_all_bits(&netlist, scenario, mode, budget) {
                let bit = netlist.inputs[idx].bit;
                match result {
                    Ok(v) => rows.push(verdict_row(
                        &file_stem(&input),
                        &scheme,
                        &key_size,
                        scenario,
                        mode,
                        bit,
                        &v.class,
                        v.stats.wall_ms,
                        v.stats.conflicts,
                    )),
                    Err(SensitizeError::WitnessVerificationFailed) => {
                        return Err(Failure::Internal(anyhow!(
                            "secret bit {bit}: witness failed re-verification"
                        )))
                    }
                    Err(e) => eprintln!("warning: secret bit {bit} skipped: {e}"),
                }
            }
            write(&out, verdicts_to_csv(&rows).as_bytes())
        }
        Cmd::Batch { spec, jobs, out_dir } => {
            let mut spec: BatchSpec =
                serde_json::from_slice(&read(&spec)?).map_err(input_err)?;
            if jobs.is_some() {
                spec.workers = jobs;
            }
            let run = run_batch(&spec).map_err(|e| match e {
                BatchError::Pool(_) => Failure::Internal(e.into()),
                other => input_err(other),
            })?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))
                .map_err(input_err)?;
            write(&out_dir.join("verdicts.csv"), verdicts_to_csv(&run.rows).as_bytes())?;
            let mut failures = String::from("variant_id,seed,group,error\n");
            for f in &run.failures {
                failures.push_str(&format!(
                    "{},{},{},{}\n",
                    f.variant_id,
                    f.seed,
                    f.group,
                    f.error.replace(',', ";")
                ));
            }
            write(&out_dir.join("failures.csv"), failures.as_bytes())?;
            let controls = serde_json::json!({
                "unlocked_all_secure": run.controls.unlocked_all_secure,
                "correct_key_equivalent": run.controls.correct_key_equivalent
                    .iter()
                    .map(|(g, ok)| serde_json::json!({"group": g, "equivalent": ok}))
                    .collect::<Vec<_>>(),
            });
            let mut controls_text = serde_json::to_string_pretty(&controls).expect("serializes");
            controls_text.push('\n');
            write(&out_dir.join("controls.json"), controls_text.as_bytes())?;
            if !run.controls.unlocked_all_secure {
                return Err(Failure::Internal(anyhow!("unlocked control was not all-secure")));
            }
            if let Some((group, _)) =
                run.controls.correct_key_equivalent.iter().find(|(_, ok)| !ok)
            {
                return Err(Failure::Internal(anyhow!(
                    "correct key did not restore group {group}"
                )));
            }
            Ok(())
        }
        Cmd::Report { in_dir, out } => {
            let mut rows: Vec<VerdictRow> = Vec::new();
            let mut entries: Vec<PathBuf> = fs::read_dir(&in_dir)
                .with_context(|| format!("reading {}", in_dir.display()))
                .map_err(input_err)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().map(|x| x == "csv").unwrap_or(false))
                .collect();
            entries.sort();
            for path in entries {
                // non-verdict CSVs (e.g. failures.csv) fail the header check
                if let Ok(mut r) = verdicts_from_csv(&String::from_utf8_lossy(&read(&path)?)) {
                    rows.append(&mut r);
                }
            }
            if rows.is_empty() {
                return Err(input_err(anyhow!(
                    "no verdict CSV files in {}",
                    in_dir.display()
                )));
            }
            // group by (scheme, key size, scenario, mode) in appearance order
            let mut groups: Vec<((String, String, Scenario, AnalysisMode), Vec<VerdictRow>)> =
                Vec::new();
            for row in rows {
                let key =
                    (row.scheme.clone(), row.key_size.clone(), row.scenario, row.mode);
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, v)) => v.push(row),
                    None => groups.push((key, vec![row])),
                }
            }
            let stem = file_stem(&out);
            let parent = out.parent().map(Path::to_path_buf).unwrap_or_default();
            let mut docs = Vec::new();
            for ((scheme, size, scenario, mode), rows) in &groups {
                let agg = aggregate(rows).map_err(input_err)?;
                let art = report(&agg);
                let slug = format!(
                    "{}-{}-{}-{}",
                    scheme,
                    size.replace('%', "pct").replace('/', "-"),
                    scenario.name(),
                    mode.name()
                );
                write(&parent.join(format!("{stem}-{slug}-bits.csv")), art.per_bit_csv.as_bytes())?;
                write(&parent.join(format!("{stem}-{slug}-hist.csv")), art.histogram_csv.as_bytes())?;
                docs.push(serde_json::from_str::<serde_json::Value>(&art.json).expect("valid"));
            }
            let mut text = serde_json::to_string_pretty(&serde_json::Value::Array(docs))
                .expect("serializes");
            text.push('\n');
            write(&out, text.as_bytes())
        }
        Cmd::Oracle { input, scenario, out } => {
            let bytes = read(&input)?;
            let locked = parse_locked_json(&bytes)
                .map_err(|e| input_err(anyhow!("{}: {e}", input.display())))?;
            let netlist = prep_combinational(locked.netlist, 8)?;
            let scenario = Scenario::from(scenario);
            let mut secrets: Vec<(u32, usize)> = netlist
                .inputs
                .iter()
                .enumerate()
                .filter(|(_, p)| p.role == PortRole::Secret)
                .map(|(i, p)| (p.bit, i))
                .collect();
            secrets.sort_unstable();
            let mut rows = Vec::new();
            for (bit, idx) in secrets {
                let class = match brute_force_leakage(&netlist, idx, scenario)
                    .map_err(input_err)?
                {
                    BruteVerdict::Detected(w) => VerdictClass::Detected(w),
                    BruteVerdict::Secure => VerdictClass::Secure,
                };
                rows.push(verdict_row(
                    &file_stem(&input),
                    "-",
                    "-",
                    scenario,
                    AnalysisMode::Exact,
                    bit,
                    &class,
                    0,
                    0,
                ));
            }
            write(&out, verdicts_to_csv(&rows).as_bytes())
        }
        Cmd::Sim { input, inputs } => {
            let netlist = load_netlist(&input)?;
            if !netlist.is_combinational() {
                return Err(input_err(anyhow!(
                    "sequential netlist; analyze with --unroll instead"
                )));
            }
            let assignment: HashMap<String, u8> =
                serde_json::from_slice(&read(&inputs)?).map_err(input_err)?;
            let mut vector = Vec::with_capacity(netlist.inputs.len());
            for p in &netlist.inputs {
                match assignment.get(&p.name) {
                    Some(0) => vector.push(false),
                    Some(1) => vector.push(true),
                    Some(v) => {
                        return Err(input_err(anyhow!("input {:?}: bad value {v}", p.name)))
                    }
                    None => return Err(input_err(anyhow!("input {:?} missing", p.name))),
                }
            }
            let outs = simulate(&netlist, &vector).map_err(input_err)?;
            let mut doc = serde_json::Map::new();
            for (i, &net) in netlist.outputs.iter().enumerate() {
                doc.insert(netlist.net_label(net), serde_json::json!(outs[i] as u8));
            }
            println!("{}", serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("serializes"));
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn verdict_row(
    variant: &str,
    scheme: &str,
    key_size: &str,
    scenario: Scenario,
    mode: AnalysisMode,
    bit: u32,
    class: &VerdictClass,
    solve_ms: u64,
    conflicts: u64,
) -> VerdictRow {
    let (output_id, polarity, witness) = match class {
        VerdictClass::Detected(w) => (Some(w.output), Some(w.polarity), w.controllable_hex()),
        _ => (None, None, String::new()),
    };
    VerdictRow {
        variant_id: variant.to_string(),
        seed: 0,
        scheme: scheme.to_string(),
        key_size: key_size.to_string(),
        scenario,
        mode,
        bit_index: bit,
        verdict: class.label().to_string(),
        output_id,
        polarity,
        witness,
        solve_ms,
        conflicts,
    }
}
