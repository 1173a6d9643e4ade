//! JSON run reports.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub name: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// `None` marks an informational finding that does not gate the exit code.
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub results: Vec<Finding>,
    pub tolerances: BTreeMap<String, f64>,
    pub wall_time_ms: f64,
    pub seed: Option<u64>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl Report {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Report {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            results: Vec::new(),
            tolerances: BTreeMap::new(),
            wall_time_ms: 0.0,
            seed,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn tolerance(&mut self, key: &str, value: f64) -> &mut Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    /// Numeric check `value` against `tolerance`.
    pub fn check(&mut self, name: impl Into<String>, value: f64, tolerance: f64, passed: bool) {
        self.results.push(Finding {
            name: name.into(),
            value: number(value),
            tolerance: Some(tolerance),
            passed: Some(passed),
            note: None,
        });
    }

    pub fn flag(&mut self, name: impl Into<String>, passed: bool, note: Option<String>) {
        self.results.push(Finding {
            name: name.into(),
            value: Value::Bool(passed),
            tolerance: None,
            passed: Some(passed),
            note,
        });
    }

    pub fn info(&mut self, name: impl Into<String>, value: impl Into<Value>, tolerance: Option<f64>) {
        self.results.push(Finding {
            name: name.into(),
            value: value.into(),
            tolerance,
            passed: None,
            note: None,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|f| f.passed != Some(false))
    }

    pub fn finish(&mut self) {
        if let Some(start) = self.started {
            self.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for f in &self.results {
            let tag = match f.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "INFO",
            };
            let value = match &f.value {
                Value::Number(n) => match n.as_f64() {
                    Some(x) if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e7) => format!("{x:.3e}"),
                    Some(x) => format!("{x}"),
                    None => n.to_string(),
                },
                other => other.to_string(),
            };
            let tol = f.tolerance.map(|t| format!(" (tol {t:e})")).unwrap_or_default();
            let note = f.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default();
            out.push_str(&format!("  {tag} {}: {value}{tol}{note}\n", f.name));
        }
        let failed = self.results.iter().filter(|f| f.passed == Some(false)).count();
        let checked = self.results.iter().filter(|f| f.passed.is_some()).count();
        out.push_str(&format!(
            "{} of {checked} checks passed in {:.1} ms\n",
            checked - failed,
            self.wall_time_ms
        ));
        out
    }
}

/// JSON number, or `null` for non-finite values.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
