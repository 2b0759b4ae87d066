//! Experiment configuration: one JSON document per run.
//!
//! Parsing runs in two stages. The `experiment` tag picks the schema, then
//! the whole document must match that schema exactly: unknown keys are
//! rejected so a typo fails loudly instead of silently falling back to a
//! default. Optional fields are filled during parsing, so the config echo
//! in the report is the normalized form and round-trips losslessly.

use crate::CliError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use geogen::{Activation, EmbeddedManifold, Optimizer};

pub const EXPERIMENT_NAMES: [&str; 5] = [
    "universality",
    "multiclass",
    "embedding-check",
    "cycle",
    "geodesic-audit",
];

/// Reference to a catalog manifold. Circles additionally accept a radius
/// and a center so one experiment can place several in the same plane;
/// every other id must appear bare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
}

impl ManifoldSpec {
    pub fn named(id: &str) -> Self {
        ManifoldSpec { id: id.to_string(), radius: None, center: None }
    }

    pub fn build(&self) -> Result<EmbeddedManifold, CliError> {
        if self.id == "circle" {
            let radius = self.radius.unwrap_or(1.0);
            if !(radius.is_finite() && radius > 0.0) {
                return Err(CliError::Config(format!(
                    "manifold \"circle\": radius must be positive and finite, got {radius}"
                )));
            }
            let center = self.center.unwrap_or([0.0, 0.0]);
            if !center.iter().all(|c| c.is_finite()) {
                return Err(CliError::Config(
                    "manifold \"circle\": center coordinates must be finite".to_string(),
                ));
            }
            return Ok(EmbeddedManifold::circle_with(radius, center));
        }
        if self.radius.is_some() || self.center.is_some() {
            return Err(CliError::Config(format!(
                "manifold {:?} takes no radius or center parameters",
                self.id
            )));
        }
        EmbeddedManifold::from_id(&self.id)
            .map_err(|e| CliError::Config(format!("manifold {:?}: {e}", self.id)))
    }

    /// Display form for metrics: the id plus placement when customized.
    pub fn describe(&self) -> String {
        match (self.radius, self.center) {
            (None, None) => self.id.clone(),
            (r, c) => {
                let radius = r.unwrap_or(1.0);
                let center = c.unwrap_or([0.0, 0.0]);
                format!("{} (radius {radius}, center [{}, {}])", self.id, center[0], center[1])
            }
        }
    }
}

fn default_diameter_samples() -> usize {
    1500
}

fn default_diameter_k() -> usize {
    16
}

fn default_optimizer() -> Optimizer {
    Optimizer::Adaptive { beta: 0.95, epsilon: 1e-8 }
}

fn default_target_loss() -> f64 {
    0.0
}

fn default_continuity_probes() -> usize {
    16
}

fn default_matvec_probes() -> usize {
    4
}

fn default_jacobian_samples() -> usize {
    50
}

fn default_roundtrip_samples() -> usize {
    1000
}

fn default_roundtrip_tolerance() -> f64 {
    1e-10
}

fn default_halving_steps() -> usize {
    16
}

fn default_ratio_bounds() -> [f64; 2] {
    [12.0, 20.0]
}

fn default_clearance() -> f64 {
    0.2
}

/// Network training block shared by experiments that fit a regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub hidden_width: usize,
    pub train_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Hausdorff target for the trained network's image.
    pub epsilon: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    /// Early-stop loss; zero keeps every epoch.
    #[serde(default = "default_target_loss")]
    pub target_loss: f64,
}

/// Generator coverage of one manifold, optionally followed by training a
/// one-hidden-layer network to imitate the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniversalityConfig {
    pub experiment: String,
    pub manifold: ManifoldSpec,
    /// Latent evaluation grid, points per axis.
    pub grid_resolution: usize,
    /// Area-uniform manifold reference sample size.
    pub sample_count: usize,
    pub surjectivity_epsilon: f64,
    #[serde(default = "default_diameter_samples")]
    pub diameter_samples: usize,
    #[serde(default = "default_diameter_k")]
    pub diameter_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Glued multi-manifold generator with slab partition and gap checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MulticlassConfig {
    pub experiment: String,
    pub classes: Vec<ManifoldSpec>,
    /// Total interpolation-gap budget on the first latent axis.
    pub delta: f64,
    pub grid_resolution: usize,
    pub sample_count: usize,
    /// Per-class Hausdorff target.
    pub epsilon: f64,
    #[serde(default = "default_continuity_probes")]
    pub continuity_probes: usize,
    #[serde(default = "default_diameter_samples")]
    pub diameter_samples: usize,
    #[serde(default = "default_diameter_k")]
    pub diameter_k: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Convolution shape sweep plus a deep-network Jacobian rank probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingCheckConfig {
    pub experiment: String,
    /// Spatial sizes m to sweep.
    pub spatial: Vec<usize>,
    /// Channel counts, used for both input k and output l.
    pub channels: Vec<usize>,
    /// Kernel sizes s.
    pub kernels: Vec<usize>,
    pub strides: Vec<usize>,
    /// Gaussian weight redraws per expanding shape.
    pub redraw_trials: usize,
    #[serde(default = "default_matvec_probes")]
    pub matvec_probes: usize,
    pub matvec_tolerance: f64,
    /// Latent points for the deep-network Jacobian rank stage.
    #[serde(default = "default_jacobian_samples")]
    pub jacobian_samples: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Forward/backward map pair between chart subsets of two manifolds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    pub experiment: String,
    pub source: ManifoldSpec,
    pub target: ManifoldSpec,
    /// Measure-deficit budget for each chart subset.
    pub delta: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub train_samples: usize,
    pub holdout_resolution: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    #[serde(default = "default_target_loss")]
    pub target_loss: f64,
    pub fit_epsilon: f64,
    pub eval_samples: usize,
    #[serde(default = "default_roundtrip_samples")]
    pub roundtrip_samples: usize,
    #[serde(default = "default_roundtrip_tolerance")]
    pub roundtrip_tolerance: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Numeric exponential map versus closed-form oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicAuditConfig {
    pub experiment: String,
    /// Manifold ids; each must carry a closed-form exponential map.
    pub manifolds: Vec<String>,
    /// Directions audited per manifold.
    pub directions: usize,
    /// Largest metric speed tested; the speed ladder ends exactly here.
    pub max_speed: f64,
    pub exp_tolerance: f64,
    pub drift_tolerance: f64,
    /// Trajectories must keep this chart-coordinate clearance from
    /// non-periodic boundaries; draws that would cross are redrawn.
    #[serde(default = "default_clearance")]
    pub boundary_clearance: f64,
    #[serde(default = "default_halving_steps")]
    pub halving_coarse_steps: usize,
    #[serde(default = "default_ratio_bounds")]
    pub ratio_bounds: [f64; 2],
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    Universality(UniversalityConfig),
    Multiclass(MulticlassConfig),
    EmbeddingCheck(EmbeddingCheckConfig),
    Cycle(CycleConfig),
    GeodesicAudit(GeodesicAuditConfig),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Universality(_) => "universality",
            ExperimentConfig::Multiclass(_) => "multiclass",
            ExperimentConfig::EmbeddingCheck(_) => "embedding-check",
            ExperimentConfig::Cycle(_) => "cycle",
            ExperimentConfig::GeodesicAudit(_) => "geodesic-audit",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Universality(c) => c.seed,
            ExperimentConfig::Multiclass(c) => c.seed,
            ExperimentConfig::EmbeddingCheck(c) => c.seed,
            ExperimentConfig::Cycle(c) => c.seed,
            ExperimentConfig::GeodesicAudit(c) => c.seed,
        }
    }

    pub fn out_dir(&self) -> Option<&Path> {
        match self {
            ExperimentConfig::Universality(c) => c.out_dir.as_deref(),
            ExperimentConfig::Multiclass(c) => c.out_dir.as_deref(),
            ExperimentConfig::EmbeddingCheck(c) => c.out_dir.as_deref(),
            ExperimentConfig::Cycle(c) => c.out_dir.as_deref(),
            ExperimentConfig::GeodesicAudit(c) => c.out_dir.as_deref(),
        }
    }

    /// Normalized JSON form: optional fields filled, nothing else changed.
    pub fn to_value(&self) -> Result<serde_json::Value, CliError> {
        let value = match self {
            ExperimentConfig::Universality(c) => serde_json::to_value(c),
            ExperimentConfig::Multiclass(c) => serde_json::to_value(c),
            ExperimentConfig::EmbeddingCheck(c) => serde_json::to_value(c),
            ExperimentConfig::Cycle(c) => serde_json::to_value(c),
            ExperimentConfig::GeodesicAudit(c) => serde_json::to_value(c),
        }?;
        Ok(value)
    }

    fn validate(&self) -> Result<(), CliError> {
        match self {
            ExperimentConfig::Universality(c) => c.validate(),
            ExperimentConfig::Multiclass(c) => c.validate(),
            ExperimentConfig::EmbeddingCheck(c) => c.validate(),
            ExperimentConfig::Cycle(c) => c.validate(),
            ExperimentConfig::GeodesicAudit(c) => c.validate(),
        }
    }
}

fn fail(msg: String) -> CliError {
    CliError::Config(msg)
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(fail(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(fail(format!("{name} must be at least {min}, got {v}")))
    }
}

impl TrainSection {
    fn validate(&self, scope: &str) -> Result<(), CliError> {
        check_at_least(&format!("{scope}.hidden_width"), self.hidden_width, 1)?;
        check_at_least(&format!("{scope}.train_samples"), self.train_samples, 2)?;
        check_at_least(&format!("{scope}.epochs"), self.epochs, 1)?;
        check_at_least(&format!("{scope}.batch_size"), self.batch_size, 1)?;
        check_positive(&format!("{scope}.learning_rate"), self.learning_rate)?;
        check_positive(&format!("{scope}.epsilon"), self.epsilon)?;
        if !(self.target_loss.is_finite() && self.target_loss >= 0.0) {
            return Err(fail(format!(
                "{scope}.target_loss must be finite and nonnegative, got {}",
                self.target_loss
            )));
        }
        Ok(())
    }
}

impl UniversalityConfig {
    fn validate(&self) -> Result<(), CliError> {
        self.manifold.build()?;
        check_at_least("grid_resolution", self.grid_resolution, 2)?;
        check_at_least("sample_count", self.sample_count, 1)?;
        check_positive("surjectivity_epsilon", self.surjectivity_epsilon)?;
        check_at_least("diameter_k", self.diameter_k, 1)?;
        check_at_least("diameter_samples", self.diameter_samples, 10 * self.diameter_k)?;
        if let Some(train) = &self.train {
            train.validate("train")?;
        }
        Ok(())
    }
}

impl MulticlassConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_at_least("classes", self.classes.len(), 2)?;
        for spec in &self.classes {
            spec.build()?;
        }
        check_positive("delta", self.delta)?;
        check_at_least("grid_resolution", self.grid_resolution, 2)?;
        check_at_least("sample_count", self.sample_count, 1)?;
        check_positive("epsilon", self.epsilon)?;
        check_at_least("continuity_probes", self.continuity_probes, 1)?;
        check_at_least("diameter_k", self.diameter_k, 1)?;
        check_at_least("diameter_samples", self.diameter_samples, 10 * self.diameter_k)?;
        Ok(())
    }
}

impl EmbeddingCheckConfig {
    fn validate(&self) -> Result<(), CliError> {
        for (name, list) in [
            ("spatial", &self.spatial),
            ("channels", &self.channels),
            ("kernels", &self.kernels),
            ("strides", &self.strides),
        ] {
            if list.is_empty() {
                return Err(fail(format!("{name} must be a nonempty list")));
            }
            if list.iter().any(|&v| v == 0) {
                return Err(fail(format!("{name} entries must be positive")));
            }
        }
        check_at_least("redraw_trials", self.redraw_trials, 1)?;
        check_at_least("matvec_probes", self.matvec_probes, 1)?;
        check_positive("matvec_tolerance", self.matvec_tolerance)?;
        check_at_least("jacobian_samples", self.jacobian_samples, 1)?;
        Ok(())
    }
}

impl CycleConfig {
    fn validate(&self) -> Result<(), CliError> {
        let src = self.source.build()?;
        let dst = self.target.build()?;
        if src.intrinsic_dim() != dst.intrinsic_dim() {
            return Err(fail(format!(
                "source and target must share intrinsic dimension, got {} and {}",
                src.intrinsic_dim(),
                dst.intrinsic_dim()
            )));
        }
        check_positive("delta", self.delta)?;
        check_at_least("train_samples", self.train_samples, 2)?;
        check_at_least("holdout_resolution", self.holdout_resolution, 2)?;
        check_at_least("batch_size", self.batch_size, 1)?;
        if self.epochs > 0 {
            check_positive("learning_rate", self.learning_rate)?;
        }
        check_positive("fit_epsilon", self.fit_epsilon)?;
        check_at_least("eval_samples", self.eval_samples, 2)?;
        check_at_least("roundtrip_samples", self.roundtrip_samples, 1)?;
        check_positive("roundtrip_tolerance", self.roundtrip_tolerance)?;
        if !(self.target_loss.is_finite() && self.target_loss >= 0.0) {
            return Err(fail(format!(
                "target_loss must be finite and nonnegative, got {}",
                self.target_loss
            )));
        }
        Ok(())
    }
}

impl GeodesicAuditConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.manifolds.is_empty() {
            return Err(fail("manifolds must be a nonempty list".to_string()));
        }
        for id in &self.manifolds {
            let m = EmbeddedManifold::from_id(id)
                .map_err(|e| fail(format!("manifold {id:?}: {e}")))?;
            let center: Vec<f64> = m
                .chart_domain()
                .intervals
                .iter()
                .map(|iv| 0.5 * (iv.lo + iv.hi))
                .collect();
            let zero = vec![0.0; m.intrinsic_dim()];
            if m.analytic_exp(&geogen::ChartPoint::new(center), &zero).is_none() {
                return Err(fail(format!(
                    "manifold {id:?} has no closed-form exponential oracle to audit against"
                )));
            }
        }
        check_at_least("directions", self.directions, 1)?;
        check_positive("max_speed", self.max_speed)?;
        check_positive("exp_tolerance", self.exp_tolerance)?;
        check_positive("drift_tolerance", self.drift_tolerance)?;
        check_positive("boundary_clearance", self.boundary_clearance)?;
        check_at_least("halving_coarse_steps", self.halving_coarse_steps, 2)?;
        let [lo, hi] = self.ratio_bounds;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(fail(format!(
                "ratio_bounds must be an increasing positive pair, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

fn section<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(value.clone())
        .map_err(|e| CliError::Config(format!("config schema error: {e}")))
}

pub fn parse_config_value(value: &serde_json::Value) -> Result<ExperimentConfig, CliError> {
    let name = value
        .get("experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            CliError::Config(
                "config must be a JSON object with a string \"experiment\" field".to_string(),
            )
        })?;
    let config = match name {
        "universality" => ExperimentConfig::Universality(section(value)?),
        "multiclass" => ExperimentConfig::Multiclass(section(value)?),
        "embedding-check" => ExperimentConfig::EmbeddingCheck(section(value)?),
        "cycle" => ExperimentConfig::Cycle(section(value)?),
        "geodesic-audit" => ExperimentConfig::GeodesicAudit(section(value)?),
        other => {
            return Err(CliError::Config(format!(
                "unknown experiment {other:?}, expected one of: {}",
                EXPERIMENT_NAMES.join(", ")
            )))
        }
    };
    config.validate()?;
    Ok(config)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    parse_config_value(&value)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config_str(&text)
}
