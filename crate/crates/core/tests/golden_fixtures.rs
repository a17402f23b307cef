//! Golden-artifact checks: shipped fixture outputs must be byte-equal to
//! regenerated ones, and the JSON report must match the shipped schema.
//!
//! Set `LOCKAUDIT_REGEN_FIXTURES=1` to rewrite the fixtures instead of
//! comparing (used once to seed them; afterwards any diff is a regression).

use lockaudit_core::batch::{
    aggregate, report, run_batch, verdicts_to_csv_canonical, BatchScheme, BatchSpec, BudgetSpec,
    VerdictRow,
};
use lockaudit_core::benchgen::fig5_example;
use lockaudit_core::gatelock::{locked_to_json, KeySize};
use lockaudit_core::sensitize::{classify_all_bits, AnalysisMode, Scenario, VerdictClass};
use lockaudit_core::sat::SolveBudget;
use std::path::PathBuf;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn check_or_regen(name: &str, generated: &[u8]) {
    let path = fixture_path(name);
    if std::env::var_os("LOCKAUDIT_REGEN_FIXTURES").is_some() {
        std::fs::write(&path, generated).expect("fixture written");
        return;
    }
    let shipped = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("fixture {name} unreadable ({e}); regenerate first"));
    if shipped != generated {
        let shipped_text = String::from_utf8_lossy(&shipped);
        let generated_text = String::from_utf8_lossy(generated);
        for (i, (a, b)) in shipped_text.lines().zip(generated_text.lines()).enumerate() {
            if a != b {
                panic!(
                    "fixture {name} differs at line {}:\n  shipped:   {a}\n  generated: {b}",
                    i + 1
                );
            }
        }
        panic!(
            "fixture {name} differs in length: shipped {} bytes, generated {} bytes",
            shipped.len(),
            generated.len()
        );
    }
}

fn fig5_verdict_rows() -> Vec<VerdictRow> {
    let locked = fig5_example();
    let mut rows = Vec::new();
    for (idx, result) in classify_all_bits(
        &locked.netlist,
        Scenario::SetLlKey,
        AnalysisMode::Exact,
        SolveBudget::UNLIMITED,
    ) {
        let verdict = result.expect("fig5 classification succeeds");
        let (output_id, polarity, witness) = match &verdict.class {
            VerdictClass::Detected(w) => (Some(w.output), Some(w.polarity), w.controllable_hex()),
            _ => (None, None, String::new()),
        };
        rows.push(VerdictRow {
            variant_id: "fig5_example".to_string(),
            seed: 0,
            scheme: "dmux".to_string(),
            key_size: locked.key.len().to_string(),
            scenario: Scenario::SetLlKey,
            mode: AnalysisMode::Exact,
            bit_index: locked.netlist.inputs[idx].bit,
            verdict: verdict.class.label().to_string(),
            output_id,
            polarity,
            witness,
            solve_ms: verdict.stats.wall_ms,
            conflicts: verdict.stats.conflicts,
        });
    }
    rows
}

#[test]
fn fig5_fixtures_regenerate_byte_equal() {
    check_or_regen("fig5_locked.json", &locked_to_json(&fig5_example()));
    check_or_regen(
        "fig5_verdicts.csv",
        verdicts_to_csv_canonical(&fig5_verdict_rows()).as_bytes(),
    );
}

fn toy_batch_spec() -> BatchSpec {
    BatchSpec {
        benchmark: "toy_spn(3,1)".to_string(),
        schemes: vec![BatchScheme::Epic],
        key_sizes: vec![KeySize::Percent(25.0)],
        variants: 10,
        base_seed: 1,
        scenarios: vec![Scenario::SetAll, Scenario::SetLlKey],
        mode: AnalysisMode::Exact,
        budget: BudgetSpec::default(),
        unroll: 8,
        workers: None,
        assure_modes: vec![],
    }
}

#[test]
fn toy_batch_fixtures_regenerate_byte_equal() {
    let spec = toy_batch_spec();
    let mut spec_json = serde_json::to_string_pretty(&spec).expect("spec serializes");
    spec_json.push('\n');
    check_or_regen("toy_batch_spec.json", spec_json.as_bytes());

    let run = run_batch(&spec).expect("batch runs");
    assert!(run.failures.is_empty());
    assert!(run.controls.unlocked_all_secure);
    check_or_regen("toy_batch_verdicts.csv", verdicts_to_csv_canonical(&run.rows).as_bytes());

    let group: Vec<VerdictRow> = run
        .rows
        .iter()
        .filter(|r| r.scheme == "epic" && r.scenario == Scenario::SetAll)
        .cloned()
        .collect();
    let art = report(&aggregate(&group).expect("complete group"));
    check_or_regen("toy_batch_bits.csv", art.per_bit_csv.as_bytes());
    check_or_regen("toy_batch_hist.csv", art.histogram_csv.as_bytes());
    check_or_regen("toy_batch_report.json", art.json.as_bytes());
}

// --- minimal JSON-schema subset validator (type/required/properties/items/
//     enum/minimum/maximum/additionalProperties), enough for the shipped
//     report schema ---

fn validate(schema: &serde_json::Value, value: &serde_json::Value, at: &str) -> Result<(), String> {
    use serde_json::Value;
    if let Some(types) = schema.get("type").and_then(Value::as_str) {
        let ok = match types {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
            "number" => value.is_number(),
            "boolean" => value.is_boolean(),
            other => return Err(format!("{at}: unsupported schema type {other:?}")),
        };
        if !ok {
            return Err(format!("{at}: expected {types}, got {value}"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{at}: {value} not in enum"));
        }
    }
    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if value.as_f64().map(|v| v < min).unwrap_or(false) {
            return Err(format!("{at}: {value} below minimum {min}"));
        }
    }
    if let Some(max) = schema.get("maximum").and_then(Value::as_f64) {
        if value.as_f64().map(|v| v > max).unwrap_or(false) {
            return Err(format!("{at}: {value} above maximum {max}"));
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    return Err(format!("{at}: missing required key {key:?}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
        for (key, sub) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub_schema) => validate(sub_schema, sub, &format!("{at}.{key}"))?,
                None if closed => return Err(format!("{at}: unexpected key {key:?}")),
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, item) in arr.iter().enumerate() {
            validate(items, item, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

#[test]
fn report_json_matches_shipped_schema() {
    let schema_text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json"),
    )
    .expect("schema shipped");
    let schema: serde_json::Value = serde_json::from_str(&schema_text).expect("schema parses");

    let run = run_batch(&toy_batch_spec()).expect("batch runs");
    let mut docs = Vec::new();
    for scenario in [Scenario::SetAll, Scenario::SetLlKey] {
        for scheme in ["none", "epic"] {
            let group: Vec<VerdictRow> = run
                .rows
                .iter()
                .filter(|r| r.scheme == scheme && r.scenario == scenario)
                .cloned()
                .collect();
            let art = report(&aggregate(&group).expect("complete group"));
            docs.push(serde_json::from_str::<serde_json::Value>(&art.json).expect("valid json"));
        }
    }
    let doc = serde_json::Value::Array(docs);
    if let Err(e) = validate(&schema, &doc, "$") {
        panic!("report does not match schema: {e}");
    }
}
