//! The `report.json` document.

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub threshold: Value,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= threshold`; NaN fails.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value: json!(value), threshold: json!(["<=", threshold]), passed: value <= threshold }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value: json!(value),
            threshold: json!(["in", lo, hi]),
            passed: (lo..=hi).contains(&value),
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: json!(ok), threshold: json!(true), passed: ok }
    }

    pub fn equals(name: &str, value: i64, expected: i64) -> Self {
        Self { name: name.into(), value: json!(value), threshold: json!(["==", expected]), passed: value == expected }
    }
}

/// Task result plus checks. `result` is `null` and `error` set when the
/// pipeline itself failed.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub task: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub result: Value,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(task: &str, scenario_hash: String, seed: u64, tol_scale: f64) -> Self {
        Self {
            task: task.into(),
            scenario_hash,
            seed,
            tol_scale,
            result: Value::Null,
            checks: Vec::new(),
            error: None,
            passed: false,
            wall_time_s: 0.0,
        }
    }

    pub fn finish(&mut self, wall_time_s: f64) {
        self.passed = self.error.is_none() && self.checks.iter().all(|c| c.passed);
        self.wall_time_s = wall_time_s;
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}
