//! Serializable experiment reports.
//!
//! The sweep schema is versioned and echoes every tolerance used, so a
//! report is a self-contained reproducibility record. Reports are
//! deterministic given (label, config): re-running produces bit-identical
//! JSON except for the wall-clock fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One ε-sweep of a metric on a registered example.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub example: String,
    pub params: BTreeMap<String, f64>,
    pub metric: String,
    /// Strictly decreasing ε grid.
    pub eps: Vec<f64>,
    /// One metric value per ε (NaN marks a failed run, annotated below).
    pub value: Vec<f64>,
    /// Fitted log-log slope over the unsaturated points (when ≥ 4 remain).
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    /// Indices excluded from the fit as below the saturation floor.
    pub excluded: Vec<usize>,
    /// Truncation dimensions used (one entry for fixed-dimension examples).
    pub dims: Vec<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub wallclock_ms: Vec<u64>,
    /// Failure annotations for partial reports, `(index, message)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<(usize, String)>,
}

impl SweepReport {
    /// (ε, value) pairs that survived the saturation mask and ran cleanly.
    pub fn unsaturated(&self) -> Vec<(f64, f64)> {
        self.eps
            .iter()
            .zip(self.value.iter())
            .enumerate()
            .filter(|(i, (_, v))| !self.excluded.contains(i) && v.is_finite())
            .map(|(_, (&e, &v))| (e, v))
            .collect()
    }
}

/// One named check inside an example run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

/// Structured result of `run_example`: the example's designated checks with
/// pass/fail evidence (failures are report content, not errors).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExampleReport {
    pub schema_version: u32,
    pub example: String,
    pub params: BTreeMap<String, f64>,
    pub claim: String,
    pub verdict: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    pub sweeps: Vec<SweepReport>,
    pub wallclock_ms: u64,
}

impl ExampleReport {
    pub fn check(&mut self, name: &str, passed: bool, details: String) {
        self.checks.push(CheckOutcome { name: name.to_string(), passed, details });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Two-column CSV of a sweep, `eps,value`.
pub fn to_csv(report: &SweepReport) -> String {
    let mut out = String::from("eps,value\n");
    for (e, v) in report.eps.iter().zip(report.value.iter()) {
        out.push_str(&format!("{e:.17e},{v:.17e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names_are_pinned() {
        let rep = SweepReport {
            schema_version: SCHEMA_VERSION,
            example: "ex3-1u".into(),
            params: BTreeMap::new(),
            metric: "uv-gap".into(),
            eps: vec![0.125, 0.0625],
            value: vec![0.5, 0.25],
            slope: Some(1.0),
            stderr: Some(0.01),
            excluded: vec![],
            dims: vec![3],
            tolerances: BTreeMap::new(),
            wallclock_ms: vec![1, 2],
            failures: vec![],
        };
        let json = serde_json::to_value(&rep).unwrap();
        for key in [
            "schema_version",
            "example",
            "params",
            "metric",
            "eps",
            "value",
            "slope",
            "stderr",
            "excluded",
            "dims",
            "tolerances",
            "wallclock_ms",
        ] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
    }

    #[test]
    fn csv_two_columns() {
        let rep = SweepReport {
            schema_version: SCHEMA_VERSION,
            example: "x".into(),
            params: BTreeMap::new(),
            metric: "uv-gap".into(),
            eps: vec![0.5],
            value: vec![0.25],
            slope: None,
            stderr: None,
            excluded: vec![],
            dims: vec![2],
            tolerances: BTreeMap::new(),
            wallclock_ms: vec![0],
            failures: vec![],
        };
        let csv = to_csv(&rep);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "eps,value");
        assert_eq!(lines.next().unwrap().split(',').count(), 2);
    }
}
