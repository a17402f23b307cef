//! Population statistics over a verdict table: per-bit verdict distribution,
//! average detection rate, and the per-variant leakage-count histogram.

use super::round_half_even;
use super::table::VerdictRow;
use crate::sensitize::{AnalysisMode, Scenario};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Verdict counts for one secret bit index across all variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitDistribution {
    pub bit: u32,
    pub dt: usize,
    pub s: usize,
    pub nd: usize,
}

/// How many variants leaked exactly `leaked_bits` secret bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub leaked_bits: usize,
    pub variant_count: usize,
}

/// Statistics for one (scheme, key size, scenario, mode) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub scheme: String,
    pub key_size: String,
    pub scenario: Scenario,
    pub mode: AnalysisMode,
    pub variant_count: usize,
    pub secret_len: usize,
    /// Mean over variants of 100 * (#DT bits) / secret_len, unrounded.
    pub avg_detection_rate_pct: f64,
    pub per_bit: Vec<BitDistribution>,
    /// One bin per possible leak count, 0..=secret_len.
    pub histogram: Vec<HistogramBin>,
    pub min_detected: usize,
    pub max_detected: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("empty verdict table")]
    Empty,
    #[error("mixed scenarios in one table: {0} and {1}")]
    MixedScenario(String, String),
    #[error("mixed {field} in one table: {a:?} and {b:?}")]
    MixedGroup { field: &'static str, a: String, b: String },
    #[error("variant {variant:?} has {got} rows for bit {bit}, expected exactly 1")]
    DuplicateOrMissing { variant: String, bit: u32, got: usize },
    #[error("variant {variant:?} covers {got} bits, expected {want}")]
    RaggedVariant { variant: String, got: usize, want: usize },
}

/// Aggregate a table covering one (scheme, key size, scenario, mode) group.
/// Every variant must contribute exactly one row per secret bit.
pub fn aggregate(rows: &[VerdictRow]) -> Result<AggregateReport, AggregateError> {
    let first = rows.first().ok_or(AggregateError::Empty)?;
    for r in rows {
        if r.scenario != first.scenario {
            return Err(AggregateError::MixedScenario(
                first.scenario.name().to_string(),
                r.scenario.name().to_string(),
            ));
        }
        let mixed = |field: &'static str, a: &str, b: &str| AggregateError::MixedGroup {
            field,
            a: a.to_string(),
            b: b.to_string(),
        };
        if r.scheme != first.scheme {
            return Err(mixed("scheme", &first.scheme, &r.scheme));
        }
        if r.key_size != first.key_size {
            return Err(mixed("key size", &first.key_size, &r.key_size));
        }
        if r.mode != first.mode {
            return Err(mixed("mode", first.mode.name(), r.mode.name()));
        }
    }

    // Variants in first-appearance order; bits sorted.
    let mut variants: Vec<&str> = Vec::new();
    let mut bits: Vec<u32> = Vec::new();
    for r in rows {
        if !variants.contains(&r.variant_id.as_str()) {
            variants.push(&r.variant_id);
        }
        if !bits.contains(&r.bit_index) {
            bits.push(r.bit_index);
        }
    }
    bits.sort_unstable();
    let secret_len = bits.len();

    // (variant, bit) -> verdicts, checking completeness.
    let mut cell: BTreeMap<(&str, u32), usize> = BTreeMap::new();
    for r in rows {
        *cell.entry((&r.variant_id, r.bit_index)).or_insert(0) += 1;
    }
    for v in &variants {
        let mut covered = 0;
        for &b in &bits {
            match cell.get(&(*v, b)).copied().unwrap_or(0) {
                1 => covered += 1,
                0 => {}
                got => {
                    return Err(AggregateError::DuplicateOrMissing {
                        variant: v.to_string(),
                        bit: b,
                        got,
                    })
                }
            }
        }
        if covered != secret_len {
            return Err(AggregateError::RaggedVariant {
                variant: v.to_string(),
                got: covered,
                want: secret_len,
            });
        }
    }

    let mut per_bit: Vec<BitDistribution> =
        bits.iter().map(|&b| BitDistribution { bit: b, dt: 0, s: 0, nd: 0 }).collect();
    let mut leaks_per_variant: BTreeMap<&str, usize> =
        variants.iter().map(|&v| (v, 0)).collect();
    for r in rows {
        let pb = per_bit.iter_mut().find(|d| d.bit == r.bit_index).expect("bit indexed");
        match r.verdict.as_str() {
            "DT" => {
                pb.dt += 1;
                *leaks_per_variant.get_mut(r.variant_id.as_str()).expect("variant indexed") += 1;
            }
            "ND" => pb.nd += 1,
            _ => pb.s += 1,
        }
    }

    let mut histogram: Vec<HistogramBin> = (0..=secret_len)
        .map(|k| HistogramBin { leaked_bits: k, variant_count: 0 })
        .collect();
    let mut rate_sum = 0.0;
    let mut min_detected = usize::MAX;
    let mut max_detected = 0;
    for v in &variants {
        let k = leaks_per_variant[v];
        histogram[k].variant_count += 1;
        rate_sum += 100.0 * k as f64 / secret_len as f64;
        min_detected = min_detected.min(k);
        max_detected = max_detected.max(k);
    }

    Ok(AggregateReport {
        scheme: first.scheme.clone(),
        key_size: first.key_size.clone(),
        scenario: first.scenario,
        mode: first.mode,
        variant_count: variants.len(),
        secret_len,
        avg_detection_rate_pct: rate_sum / variants.len() as f64,
        per_bit,
        histogram,
        min_detected,
        max_detected,
    })
}

/// Report artifacts: the two fixed-schema CSV views plus a JSON document
/// with all percentages rounded half-even to 4 decimals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportArtifacts {
    pub per_bit_csv: String,
    pub histogram_csv: String,
    pub json: String,
}

#[derive(Serialize)]
struct PerBitJson {
    bit: u32,
    dt: usize,
    s: usize,
    nd: usize,
    dt_pct: f64,
    s_pct: f64,
    nd_pct: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    scheme: &'a str,
    key_size: &'a str,
    scenario: &'a str,
    mode: &'a str,
    variant_count: usize,
    secret_len: usize,
    avg_detection_rate_pct: f64,
    per_bit: Vec<PerBitJson>,
    histogram: &'a [HistogramBin],
    min_detected: usize,
    max_detected: usize,
}

fn pct(count: usize, total: usize) -> f64 {
    round_half_even(100.0 * count as f64 / total as f64, 4)
}

/// Render the three report artifacts for one aggregate.
pub fn report(agg: &AggregateReport) -> ReportArtifacts {
    let n = agg.variant_count;
    let mut per_bit_csv = String::from("bit,dt_pct,s_pct,nd_pct\n");
    let mut per_bit_json = Vec::with_capacity(agg.per_bit.len());
    for d in &agg.per_bit {
        let (dt_pct, s_pct, nd_pct) = (pct(d.dt, n), pct(d.s, n), pct(d.nd, n));
        per_bit_csv.push_str(&format!("{},{},{},{}\n", d.bit, dt_pct, s_pct, nd_pct));
        per_bit_json.push(PerBitJson { bit: d.bit, dt: d.dt, s: d.s, nd: d.nd, dt_pct, s_pct, nd_pct });
    }

    let mut histogram_csv = String::from("leaked_bits,variant_count\n");
    for bin in &agg.histogram {
        histogram_csv.push_str(&format!("{},{}\n", bin.leaked_bits, bin.variant_count));
    }

    let doc = ReportJson {
        scheme: &agg.scheme,
        key_size: &agg.key_size,
        scenario: agg.scenario.name(),
        mode: agg.mode.name(),
        variant_count: n,
        secret_len: agg.secret_len,
        avg_detection_rate_pct: round_half_even(agg.avg_detection_rate_pct, 4),
        per_bit: per_bit_json,
        histogram: &agg.histogram,
        min_detected: agg.min_detected,
        max_detected: agg.max_detected,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serializes");
    json.push('\n');
    ReportArtifacts { per_bit_csv, histogram_csv, json }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, bit: u32, verdict: &str, scenario: Scenario) -> VerdictRow {
        VerdictRow {
            variant_id: variant.to_string(),
            seed: 1,
            scheme: "epic".to_string(),
            key_size: "25%".to_string(),
            scenario,
            mode: AnalysisMode::Exact,
            bit_index: bit,
            verdict: verdict.to_string(),
            output_id: None,
            polarity: None,
            witness: String::new(),
            solve_ms: 0,
            conflicts: 0,
        }
    }

    /// 2 variants over a 4-bit secret with 1 and 3 detections: the average
    /// detection rate is (25 + 75) / 2 = 50%.
    #[test]
    fn closed_form_detection_rate() {
        let mut rows = Vec::new();
        for bit in 0..4 {
            rows.push(row("v0", bit, if bit == 0 { "DT" } else { "S" }, Scenario::SetAll));
            rows.push(row("v1", bit, if bit < 3 { "DT" } else { "S" }, Scenario::SetAll));
        }
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.variant_count, 2);
        assert_eq!(agg.secret_len, 4);
        assert_eq!(agg.avg_detection_rate_pct, 50.0);
        assert_eq!(agg.min_detected, 1);
        assert_eq!(agg.max_detected, 3);
        assert_eq!(agg.histogram[1].variant_count, 1);
        assert_eq!(agg.histogram[3].variant_count, 1);
        let mass: usize = agg.histogram.iter().map(|b| b.variant_count).sum();
        assert_eq!(mass, 2);
        for d in &agg.per_bit {
            assert_eq!(d.dt + d.s + d.nd, 2);
        }
    }

    #[test]
    fn all_secure_table_rates_zero() {
        let rows: Vec<VerdictRow> =
            (0..3).map(|bit| row("v0", bit, "S", Scenario::SetLlKey)).collect();
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.avg_detection_rate_pct, 0.0);
        assert_eq!(agg.histogram[0].variant_count, 1);
        assert_eq!((agg.min_detected, agg.max_detected), (0, 0));
    }

    #[test]
    fn mixed_scenario_rejected() {
        let rows =
            vec![row("v0", 0, "S", Scenario::SetAll), row("v0", 1, "S", Scenario::SetLlKey)];
        assert!(matches!(aggregate(&rows), Err(AggregateError::MixedScenario(_, _))));
    }

    #[test]
    fn incomplete_variant_rejected() {
        let rows = vec![
            row("v0", 0, "S", Scenario::SetAll),
            row("v0", 1, "S", Scenario::SetAll),
            row("v1", 0, "S", Scenario::SetAll),
        ];
        assert!(matches!(aggregate(&rows), Err(AggregateError::RaggedVariant { .. })));
    }

    #[test]
    fn duplicate_cell_rejected() {
        let rows = vec![row("v0", 0, "S", Scenario::SetAll), row("v0", 0, "DT", Scenario::SetAll)];
        assert!(matches!(aggregate(&rows), Err(AggregateError::DuplicateOrMissing { .. })));
    }

    #[test]
    fn report_headers_and_rounding() {
        let mut rows = Vec::new();
        for v in 0..3 {
            let name = format!("v{v}");
            rows.push(row(&name, 0, if v == 0 { "DT" } else { "S" }, Scenario::SetAll));
            rows.push(row(&name, 1, "ND", Scenario::SetAll));
        }
        let art = report(&aggregate(&rows).unwrap());
        let mut lines = art.per_bit_csv.lines();
        assert_eq!(lines.next(), Some("bit,dt_pct,s_pct,nd_pct"));
        // 1/3 of 100% rounds half-even at 4 decimals to 33.3333
        assert_eq!(lines.next(), Some("0,33.3333,66.6667,0"));
        assert_eq!(lines.next(), Some("1,0,0,100"));
        assert!(art.histogram_csv.starts_with("leaked_bits,variant_count\n"));
        let doc: serde_json::Value = serde_json::from_str(&art.json).unwrap();
        assert_eq!(doc["variant_count"], 3);
        assert_eq!(doc["per_bit"][0]["dt_pct"], 33.3333);
    }

    /// Spreadsheet-style recomputation from the emitted CSVs must agree
    /// with the aggregate on a generated 100-variant table.
    #[test]
    fn csv_recomputation_matches_aggregate() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        for v in 0..100 {
            let name = format!("v{v:03}");
            for bit in 0..6 {
                let verdict = match rng.gen_range(0..10) {
                    0..=2 => "DT",
                    3 => "ND",
                    _ => "S",
                };
                rows.push(row(&name, bit, verdict, Scenario::SetAll));
            }
        }
        let agg = aggregate(&rows).unwrap();
        let art = report(&agg);

        // Recompute per-bit percentages from the verdict CSV text alone.
        let csv = super::super::table::verdicts_to_csv(&rows);
        let parsed = super::super::table::verdicts_from_csv(&csv).unwrap();
        for bit in 0..6u32 {
            let dt = parsed.iter().filter(|r| r.bit_index == bit && r.verdict == "DT").count();
            let expect = round_half_even(100.0 * dt as f64 / 100.0, 4);
            let line = art
                .per_bit_csv
                .lines()
                .find(|l| l.starts_with(&format!("{bit},")))
                .unwrap();
            let got: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(got, expect);
        }
        // Recompute the average rate from per-variant DT counts.
        let mut sum = 0.0;
        for v in 0..100 {
            let name = format!("v{v:03}");
            let k = parsed.iter().filter(|r| r.variant_id == name && r.verdict == "DT").count();
            sum += 100.0 * k as f64 / 6.0;
        }
        assert!((agg.avg_detection_rate_pct - sum / 100.0).abs() < 1e-9);
    }
}
