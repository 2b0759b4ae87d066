//! Report assembly, finiteness checking, and stage timing.

use crate::CliError;
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Everything one run records besides its artifact files.
///
/// `metrics` must be bit-identical across reruns of the same config and
/// seed on one machine; `timings_ms` is the single section allowed to
/// differ. `failures` holds one line per missed target and is empty
/// exactly when `pass` is true.
#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// The input config after normalization (defaults filled).
    pub config: Value,
    pub metrics: Value,
    pub pass: bool,
    pub failures: Vec<String>,
    /// File names written next to report.json, in creation order.
    pub artifacts: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl ExperimentReport {
    /// Serializes to `<dir>/report.json`. Key order is the struct field
    /// order, stable across runs.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        ensure_finite("metrics", &self.metrics)?;
        if self.pass != self.failures.is_empty() {
            return Err(CliError::Report(format!(
                "pass flag {} inconsistent with {} recorded failures",
                self.pass,
                self.failures.len()
            )));
        }
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Rejects null and non-finite numbers anywhere in a metrics tree.
/// serde_json turns NaN and infinities into `null`, so a null here means a
/// computation produced a non-finite value that must not reach disk.
pub fn ensure_finite(path: &str, value: &Value) -> Result<(), CliError> {
    match value {
        Value::Null => Err(CliError::Report(format!(
            "non-finite or missing numeric value at {path}"
        ))),
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                ensure_finite(&format!("{path}[{i}]"), item)?;
            }
            Ok(())
        }
        Value::Object(map) => {
            for (key, item) in map {
                ensure_finite(&format!("{path}.{key}"), item)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Accumulates wall-clock time per named stage.
#[derive(Debug, Default)]
pub struct StageTimer {
    timings: BTreeMap<String, f64>,
}

impl StageTimer {
    pub fn new() -> Self {
        StageTimer::default()
    }

    /// Runs `f`, charging its wall time to `name`. Repeated stages
    /// accumulate.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        *self.timings.entry(name.to_string()).or_insert(0.0) += ms;
        out
    }

    pub fn finish(self) -> BTreeMap<String, f64> {
        self.timings
    }
}
