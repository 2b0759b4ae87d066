//! The five experiment drivers.

mod cycle;
mod embedding;
mod geodesic;
mod multiclass;
mod universality;

use crate::config::ExperimentConfig;
use crate::report::ExperimentReport;
use crate::CliError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport, CliError> {
    std::fs::create_dir_all(out_dir)?;
    match config {
        ExperimentConfig::Universality(c) => universality::run(c, out_dir),
        ExperimentConfig::Multiclass(c) => multiclass::run(c, out_dir),
        ExperimentConfig::EmbeddingCheck(c) => embedding::run(c, out_dir),
        ExperimentConfig::Cycle(c) => cycle::run(c, out_dir),
        ExperimentConfig::GeodesicAudit(c) => geodesic::run(c, out_dir),
    }
}

pub(crate) fn assemble<C: Serialize, M: Serialize>(
    experiment: &str,
    config: &C,
    metrics: &M,
    failures: Vec<String>,
    artifacts: Vec<String>,
    timings_ms: BTreeMap<String, f64>,
) -> Result<ExperimentReport, CliError> {
    Ok(ExperimentReport {
        experiment: experiment.to_string(),
        config: serde_json::to_value(config)?,
        metrics: serde_json::to_value(metrics)?,
        pass: failures.is_empty(),
        failures,
        artifacts,
        timings_ms,
    })
}

/// Records a missed target as one human-readable line.
pub(crate) fn require(failures: &mut Vec<String>, ok: bool, line: String) {
    if !ok {
        failures.push(line);
    }
}

pub(crate) fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
