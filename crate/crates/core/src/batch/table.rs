//! Flat verdict table: one row per (variant, secret bit, scenario), with a
//! fixed CSV column schema for downstream tooling.

use crate::sensitize::{AnalysisMode, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// CSV header shared by emit and parse.
pub const VERDICT_CSV_HEADER: &str =
    "variant_id,seed,scheme,key_size,scenario,mode,bit_index,verdict,output_id,polarity,witness,solve_ms,conflicts";

/// One classified (variant, bit, scenario) outcome. `output_id`, `polarity`
/// and `witness` are populated only for DT rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub variant_id: String,
    pub seed: u64,
    pub scheme: String,
    pub key_size: String,
    pub scenario: Scenario,
    pub mode: AnalysisMode,
    pub bit_index: u32,
    /// "DT" | "S" | "ND"
    pub verdict: String,
    pub output_id: Option<usize>,
    pub polarity: Option<bool>,
    /// Controllable-input pattern as hex, empty when not detected.
    pub witness: String,
    pub solve_ms: u64,
    pub conflicts: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CsvError {
    #[error("line {0}: expected 13 columns, got {1}")]
    ColumnCount(usize, usize),
    #[error("line {0}: bad value in column {1:?}: {2:?}")]
    BadValue(usize, &'static str, String),
    #[error("missing or wrong header line")]
    BadHeader,
}

fn row_line(r: &VerdictRow, mask_timing: bool) -> String {
    let opt_usize = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let opt_bool = |v: Option<bool>| v.map(|x| (x as u8).to_string()).unwrap_or_default();
    let solve_ms = if mask_timing { "-".to_string() } else { r.solve_ms.to_string() };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.variant_id,
        r.seed,
        r.scheme,
        r.key_size,
        r.scenario.name(),
        r.mode.name(),
        r.bit_index,
        r.verdict,
        opt_usize(r.output_id),
        opt_bool(r.polarity),
        r.witness,
        solve_ms,
        r.conflicts,
    )
}

/// Serialize the table, header first, trailing newline.
pub fn verdicts_to_csv(rows: &[VerdictRow]) -> String {
    let mut out = String::from(VERDICT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row_line(r, false));
        out.push('\n');
    }
    out
}

/// Like [`verdicts_to_csv`] but with the wall-clock `solve_ms` column masked
/// to "-", so two runs of the same campaign compare byte-equal.
pub fn verdicts_to_csv_canonical(rows: &[VerdictRow]) -> String {
    let mut out = String::from(VERDICT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row_line(r, true));
        out.push('\n');
    }
    out
}

/// Parse a verdict CSV produced by [`verdicts_to_csv`] (either timing form).
pub fn verdicts_from_csv(text: &str) -> Result<Vec<VerdictRow>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == VERDICT_CSV_HEADER => {}
        _ => return Err(CsvError::BadHeader),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(CsvError::ColumnCount(lineno, cols.len()));
        }
        let bad = |col: &'static str, v: &str| CsvError::BadValue(lineno, col, v.to_string());
        let scenario = match cols[4] {
            "set-all" => Scenario::SetAll,
            "set-ll-key" => Scenario::SetLlKey,
            v => return Err(bad("scenario", v)),
        };
        let mode = match cols[5] {
            "dualrail" => AnalysisMode::DualRail,
            "exact" => AnalysisMode::Exact,
            v => return Err(bad("mode", v)),
        };
        if !matches!(cols[7], "DT" | "S" | "ND") {
            return Err(bad("verdict", cols[7]));
        }
        let output_id = match cols[8] {
            "" => None,
            v => Some(v.parse().map_err(|_| bad("output_id", v))?),
        };
        let polarity = match cols[9] {
            "" => None,
            "0" => Some(false),
            "1" => Some(true),
            v => return Err(bad("polarity", v)),
        };
        let solve_ms = match cols[11] {
            "-" => 0,
            v => v.parse().map_err(|_| bad("solve_ms", v))?,
        };
        rows.push(VerdictRow {
            variant_id: cols[0].to_string(),
            seed: cols[1].parse().map_err(|_| bad("seed", cols[1]))?,
            scheme: cols[2].to_string(),
            key_size: cols[3].to_string(),
            scenario,
            mode,
            bit_index: cols[6].parse().map_err(|_| bad("bit_index", cols[6]))?,
            verdict: cols[7].to_string(),
            output_id,
            polarity,
            witness: cols[10].to_string(),
            solve_ms,
            conflicts: cols[12].parse().map_err(|_| bad("conflicts", cols[12]))?,
        });
    }
    Ok(rows)
}
