//! Command-line front end for the geogen laboratory.
//!
//! One invocation runs one experiment: a JSON config names the experiment
//! and all its parameters, the runner executes it end to end, and the
//! output directory receives `report.json` plus point-cloud CSVs, SVG
//! scatter plots, and network checkpoints where the experiment produces
//! them. Exit status encodes the verdict: 0 when every configured target
//! was met, 2 when the run completed but missed a target, 1 on any error.
//!
//! All randomness derives from the single config seed through the same
//! stage-name derivation rule the core crate uses, so reports are
//! bit-identical across reruns of the same config on one machine. Wall
//! clock timings are the single deliberately non-reproducible section of
//! the report.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{load_config, parse_config_str, parse_config_value, ExperimentConfig};
pub use report::ExperimentReport;

/// Environment override for the output directory. This is the only
/// environment variable the tool reads; everything else lives in the
/// config file.
pub const OUT_DIR_ENV: &str = "GEOGEN_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The config failed schema validation. The message names the
    /// offending keys or values.
    #[error("config error: {0}")]
    Config(String),

    /// The report violated its own contract (a non-finite metric, an
    /// unwritable destination).
    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Run(#[from] geogen::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Resolves where artifacts go: `--out` flag, then [`OUT_DIR_ENV`], then
/// the config's `out_dir`, then `geogen-out/<experiment>`.
pub fn resolve_out_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    if let Some(dir) = config.out_dir() {
        return dir.to_path_buf();
    }
    PathBuf::from("geogen-out").join(config.name())
}

/// Loads a config file, runs its experiment, and writes the report.
/// Returns the report together with the directory it landed in.
pub fn run_config_file(
    path: &Path,
    out_flag: Option<&Path>,
) -> Result<(ExperimentReport, PathBuf), CliError> {
    let config = load_config(path)?;
    let out_dir = resolve_out_dir(out_flag, &config);
    let report = experiments::run(&config, &out_dir)?;
    report.write(&out_dir)?;
    Ok((report, out_dir))
}

/// The experiment catalog, in the fixed order the `list` subcommand
/// prints it.
pub fn list_experiments() -> String {
    let entries = [
        (
            "universality",
            "covers a manifold with an exponential-map generator and trains a shallow dense \
             network on it; certifies generator surjectivity and Hausdorff-close imitation",
        ),
        (
            "multiclass",
            "glues one generator per class along slab partitions with interpolation gaps; \
             certifies exact gap measure, per-class coverage, and continuity across gap faces",
        ),
        (
            "embedding-check",
            "sweeps circular convolution shapes as explicit matrices; certifies transpose \
             duality, generic full rank of expanding layers, and rank stability of a deep \
             expanding network",
        ),
        (
            "cycle",
            "trains forward and backward networks between two chart subsets; certifies \
             round-trip composition error against the fit-plus-Lipschitz budget",
        ),
        (
            "geodesic-audit",
            "integrates geodesics against closed-form exponential maps; certifies integrator \
             accuracy, constant metric speed, and fourth-order step scaling",
        ),
    ];
    let mut out = String::new();
    for (name, text) in entries {
        out.push_str(&format!("{name:<16}{text}\n"));
    }
    out
}
