//! Exponential-map audit: random geodesics on manifolds with closed-form
//! exponentials, numeric endpoint against the oracle, metric-speed drift,
//! and a step-halving order probe.

use crate::config::GeodesicAuditConfig;
use crate::experiments::{assemble, require};
use crate::plot::{scatter_svg, Series};
use crate::report::{ExperimentReport, StageTimer};
use crate::CliError;
use geogen::geodesic::default_exp_steps;
use geogen::rng::{derive_seed, stage_rng};
use geogen::{
    exp_map_numeric, integrate_geodesic, speed_drift, ChartPoint, EmbeddedManifold, PointCloud,
};
use rand::Rng;
use serde::Serialize;
use std::path::Path;

/// Oracle sample points along each candidate geodesic when checking that it
/// keeps clear of non-periodic chart boundaries.
const PATH_PROBES: usize = 64;

#[derive(Serialize)]
struct ManifoldAudit {
    manifold: String,
    directions: usize,
    rejected_draws: usize,
    max_exp_error: f64,
    max_speed_drift: f64,
    max_speed: f64,
}

#[derive(Serialize)]
struct HalvingMetrics {
    base_point: Vec<f64>,
    velocity: Vec<f64>,
    coarse_steps: usize,
    fine_steps: usize,
    error_coarse: f64,
    error_fine: f64,
    ratio: f64,
    bounds: [f64; 2],
    ok: bool,
}

#[derive(Serialize)]
struct Metrics {
    exp_tolerance: f64,
    drift_tolerance: f64,
    boundary_clearance: f64,
    manifolds: Vec<ManifoldAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    halving: Option<HalvingMetrics>,
}

/// True when the oracle geodesic t ↦ exp_q(t v) stays at least `clearance`
/// away from every non-periodic chart boundary over t ∈ [0, 1].
fn path_stays_clear(
    manifold: &EmbeddedManifold,
    q: &ChartPoint,
    v: &[f64],
    clearance: f64,
) -> bool {
    let domain = manifold.chart_domain().clone();
    let non_periodic: Vec<usize> =
        (0..manifold.intrinsic_dim()).filter(|&a| !manifold.is_periodic(a)).collect();
    if non_periodic.is_empty() {
        return true;
    }
    for t in 0..=PATH_PROBES {
        let tau = t as f64 / PATH_PROBES as f64;
        let scaled: Vec<f64> = v.iter().map(|c| tau * c).collect();
        let Some(ambient) = manifold.analytic_exp(q, &scaled) else {
            return false;
        };
        let Ok(p) = manifold.chart_inverse(&ambient) else {
            return false;
        };
        for &axis in &non_periodic {
            let iv = domain.intervals[axis];
            let x = p.coords[axis];
            if x < iv.lo + clearance || x > iv.hi - clearance {
                return false;
            }
        }
    }
    true
}

fn audit_manifold(
    id: &str,
    cfg: &GeodesicAuditConfig,
) -> Result<ManifoldAudit, CliError> {
    let manifold = EmbeddedManifold::from_id(id)?;
    let mut rng = stage_rng(cfg.seed, &format!("audit draws {id}"));
    let domain = manifold.chart_domain().clone();
    let d = manifold.intrinsic_dim();

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut max_err = 0.0_f64;
    let mut max_drift = 0.0_f64;
    let mut max_speed_seen = 0.0_f64;
    let attempt_cap = 200 * cfg.directions;
    let mut attempts = 0usize;

    while accepted < cfg.directions {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(geogen::Error::ResourceLimit(format!(
                "audit of {id:?} accepted only {accepted} of {} directions in {attempt_cap} draws; \
                 boundary clearance {} leaves too little room",
                cfg.directions, cfg.boundary_clearance
            ))
            .into());
        }

        let coords: Vec<f64> = (0..d)
            .map(|axis| {
                let iv = domain.intervals[axis];
                let (lo, hi) = if manifold.is_periodic(axis) {
                    (iv.lo, iv.hi)
                } else {
                    (iv.lo + cfg.boundary_clearance, iv.hi - cfg.boundary_clearance)
                };
                lo + (hi - lo) * rng.random::<f64>()
            })
            .collect();
        let q = ChartPoint::new(coords);

        let raw: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let g = manifold.metric(&q)?;
        let raw_speed = g.norm(&raw);
        if raw_speed < 1e-9 {
            rejected += 1;
            continue;
        }
        // Ladder of speeds ending exactly at the configured maximum.
        let speed = cfg.max_speed * (accepted + 1) as f64 / cfg.directions as f64;
        let v: Vec<f64> = raw.iter().map(|c| c * speed / raw_speed).collect();

        if !path_stays_clear(&manifold, &q, &v, cfg.boundary_clearance) {
            rejected += 1;
            continue;
        }

        let oracle = manifold
            .analytic_exp(&q, &v)
            .expect("audited manifolds carry a closed-form exponential");
        let trajectory =
            integrate_geodesic(&manifold, &q, &v, 1.0, default_exp_steps(speed))?;
        let numeric = manifold.embed(&trajectory.end().position)?;
        max_err = max_err.max(numeric.distance(&oracle));
        max_drift = max_drift.max(speed_drift(&manifold, &trajectory));
        max_speed_seen = max_speed_seen.max(speed);
        accepted += 1;
    }

    Ok(ManifoldAudit {
        manifold: id.to_string(),
        directions: accepted,
        rejected_draws: rejected,
        max_exp_error: max_err,
        max_speed_drift: max_drift,
        max_speed: max_speed_seen,
    })
}

/// Fixed probe on the sphere, where the integrator actually works for its
/// accuracy: halving the step should shrink the endpoint error by roughly
/// 2⁴, the classical RK4 order.
fn halving_probe(cfg: &GeodesicAuditConfig) -> Result<HalvingMetrics, CliError> {
    let manifold = EmbeddedManifold::sphere();
    let q = ChartPoint::new(vec![1.0, 0.5]);
    let v = vec![0.9, 1.1];
    let oracle = manifold
        .analytic_exp(&q, &v)
        .expect("sphere carries a closed-form exponential");
    let coarse_steps = cfg.halving_coarse_steps;
    let fine_steps = 2 * coarse_steps;
    let error_coarse = exp_map_numeric(&manifold, &q, &v, Some(coarse_steps))?.distance(&oracle);
    let error_fine = exp_map_numeric(&manifold, &q, &v, Some(fine_steps))?.distance(&oracle);
    let ratio = error_coarse / error_fine;
    Ok(HalvingMetrics {
        base_point: q.coords,
        velocity: v,
        coarse_steps,
        fine_steps,
        error_coarse,
        error_fine,
        ratio,
        bounds: cfg.ratio_bounds,
        ok: ratio >= cfg.ratio_bounds[0] && ratio <= cfg.ratio_bounds[1],
    })
}

pub(crate) fn run(cfg: &GeodesicAuditConfig, out: &Path) -> Result<ExperimentReport, CliError> {
    let mut timer = StageTimer::new();
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();

    let mut audits = Vec::with_capacity(cfg.manifolds.len());
    for id in &cfg.manifolds {
        let audit = timer.stage(&format!("audit {id}"), || audit_manifold(id, cfg))?;
        require(
            &mut failures,
            audit.max_exp_error <= cfg.exp_tolerance,
            format!(
                "{}: endpoint error {:.3e} exceeds {:.1e}",
                audit.manifold, audit.max_exp_error, cfg.exp_tolerance
            ),
        );
        require(
            &mut failures,
            audit.max_speed_drift <= cfg.drift_tolerance,
            format!(
                "{}: metric speed drifts {:.3e} > {:.1e}",
                audit.manifold, audit.max_speed_drift, cfg.drift_tolerance
            ),
        );
        audits.push(audit);
    }

    let sphere_audited = cfg.manifolds.iter().any(|id| id == "sphere");
    let halving = if sphere_audited {
        let h = timer.stage("step halving", || halving_probe(cfg))?;
        require(
            &mut failures,
            h.ok,
            format!(
                "step-halving error ratio {:.2} outside [{}, {}]",
                h.ratio, h.bounds[0], h.bounds[1]
            ),
        );
        Some(h)
    } else {
        None
    };

    if sphere_audited {
        timer.stage("artifacts", || -> Result<(), CliError> {
            let manifold = EmbeddedManifold::sphere();
            let q = ChartPoint::new(vec![1.0, 0.5]);
            let v = vec![0.9, 1.1];
            let trajectory = integrate_geodesic(
                &manifold,
                &q,
                &v,
                1.0,
                2 * cfg.halving_coarse_steps,
            )?;
            let rows: Result<Vec<Vec<f64>>, geogen::Error> = trajectory
                .states
                .iter()
                .map(|s| manifold.embed(&s.position).map(|a| a.coords))
                .collect();
            let path_cloud = PointCloud::from_rows(&rows?)?.with_label("geodesic path");
            path_cloud.write_csv(&out.join("sphere-geodesic.csv"))?;
            artifacts.push("sphere-geodesic.csv".to_string());

            let context = manifold
                .sample_area_uniform(2000, derive_seed(cfg.seed, "plot context"));
            let context_rows: Vec<Vec<f64>> = context
                .iter()
                .map(|p| manifold.embed_unchecked(&p.coords))
                .collect();
            let context_cloud =
                PointCloud::from_rows(&context_rows)?.with_label("sphere sample");
            scatter_svg(
                &out.join("geodesic-audit.svg"),
                "sphere geodesic against surface sample",
                &[
                    Series { label: "sphere sample", cloud: &context_cloud, color: "#9ecae1" },
                    Series { label: "geodesic path", cloud: &path_cloud, color: "#d62728" },
                ],
            )?;
            artifacts.push("geodesic-audit.svg".to_string());
            Ok(())
        })?;
    }

    let metrics = Metrics {
        exp_tolerance: cfg.exp_tolerance,
        drift_tolerance: cfg.drift_tolerance,
        boundary_clearance: cfg.boundary_clearance,
        manifolds: audits,
        halving,
    };
    assemble("geodesic-audit", cfg, &metrics, failures, artifacts, timer.finish())
}
