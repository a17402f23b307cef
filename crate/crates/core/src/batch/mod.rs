//! Batch campaign runner and aggregator: seeded populations of locked
//! variants, classified under one or both attack scenarios, reduced to
//! population statistics with fixed-schema CSV/JSON artifacts.

mod aggregate;
mod run;
mod table;

pub use aggregate::{
    aggregate, report, AggregateError, AggregateReport, BitDistribution, HistogramBin,
    ReportArtifacts,
};
pub use run::{run_batch, BatchError, BatchRun, ControlSummary, VariantFailure};
pub use table::{
    verdicts_from_csv, verdicts_to_csv, verdicts_to_csv_canonical, CsvError, VerdictRow,
    VERDICT_CSV_HEADER,
};

use crate::gatelock::KeySize;
use crate::sensitize::{AnalysisMode, Scenario};
use crate::word::AssureMode;
use serde::{Deserialize, Serialize};

/// Which locking transformation a campaign applies per variant. `None` runs
/// the plain design and serves as the explicit unlocked control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchScheme {
    None,
    Epic,
    Dmux,
    Assure,
}

impl BatchScheme {
    pub fn name(self) -> &'static str {
        match self {
            BatchScheme::None => "none",
            BatchScheme::Epic => "epic",
            BatchScheme::Dmux => "dmux",
            BatchScheme::Assure => "assure",
        }
    }
}

/// Per-query solver budget. The default is conflict-bounded only, so that
/// verdicts do not depend on wall-clock behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default = "default_conflicts")]
    pub conflicts: Option<u64>,
}

fn default_conflicts() -> Option<u64> {
    Some(2_000_000)
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec { timeout_ms: None, conflicts: default_conflicts() }
    }
}

impl BudgetSpec {
    pub fn to_solve_budget(self) -> crate::sat::SolveBudget {
        crate::sat::SolveBudget { wall_ms: self.timeout_ms, conflicts: self.conflicts }
    }
}

/// A full campaign description. Variant seeds are `base_seed + variant
/// index`, so any variant can be regenerated in isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    /// Benchmark reference, e.g. `"toy_spn(4,2)"` or `"fig5_example"`.
    pub benchmark: String,
    pub schemes: Vec<BatchScheme>,
    /// One campaign group per (scheme, key size). Ignored by `none` and
    /// `assure`, which have no placement-count parameter.
    #[serde(default)]
    pub key_sizes: Vec<KeySize>,
    /// Locked variants per group; the default population is 100.
    #[serde(default = "default_variants")]
    pub variants: usize,
    pub base_seed: u64,
    pub scenarios: Vec<Scenario>,
    pub mode: AnalysisMode,
    #[serde(default)]
    pub budget: BudgetSpec,
    /// Time-frame expansion depth for sequential benchmarks.
    #[serde(default = "default_unroll")]
    pub unroll: usize,
    /// Worker threads; `None` uses the global thread pool.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Site classes for the `assure` scheme.
    #[serde(default = "all_assure_modes")]
    pub assure_modes: Vec<AssureMode>,
}

fn default_variants() -> usize {
    100
}

fn default_unroll() -> usize {
    8
}

fn all_assure_modes() -> Vec<AssureMode> {
    vec![AssureMode::Const, AssureMode::Ops, AssureMode::Branch]
}

/// Banker's rounding to `decimals` decimal places.
pub fn round_half_even(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let rounded = if (frac - 0.5).abs() < 1e-9 {
        // exactly halfway: go to the even neighbour
        if (floor as i64) % 2 == 0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        scaled.round()
    };
    rounded / scale
}
