//! Glued multi-manifold generator: slab partition, per-class coverage,
//! and continuity across the interpolation gaps.

use crate::config::MulticlassConfig;
use crate::experiments::universality::chart_center;
use crate::experiments::{assemble, l2, require};
use crate::plot::{scatter_svg, Series};
use crate::report::{ExperimentReport, StageTimer};
use crate::CliError;
use geogen::rng::{derive_seed, stage_rng};
use geogen::{
    build_generator, build_multiclass_map, build_multiclass_partition, estimate_diameter,
    hausdorff, net_fineness, MulticlassGenerator, PointCloud,
};
use rand::Rng;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct ClassMetrics {
    manifold: String,
    radius_bound: f64,
    hausdorff: f64,
    sample_fineness: f64,
}

#[derive(Serialize)]
struct ContinuityMetrics {
    probes: usize,
    /// First-axis step used for the one-sided jump probes.
    spacing: f64,
    max_jump: f64,
    /// Largest sampled slope of the gap interpolation.
    lipschitz_estimate: f64,
    /// 1e-9 + lipschitz_estimate * spacing.
    bound: f64,
    ok: bool,
}

#[derive(Serialize)]
struct Metrics {
    class_count: usize,
    latent_dim: usize,
    delta: f64,
    gap_half_width: f64,
    removed_measure: f64,
    /// Bitwise equality of the normalized removed measure with delta/2.
    removed_equals_half_delta: bool,
    removed_within_delta: bool,
    grid_resolution: usize,
    sample_count: usize,
    epsilon: f64,
    classes: Vec<ClassMetrics>,
    continuity: ContinuityMetrics,
}

fn gap_continuity(
    map: &MulticlassGenerator,
    probes: usize,
    spacing: f64,
    seed: u64,
) -> Result<ContinuityMetrics, CliError> {
    let mut rng = stage_rng(seed, "continuity probes");
    let d = map.latent_dim();
    let partition = map.partition();
    let mut max_jump = 0.0f64;
    let mut lipschitz = 0.0f64;
    for _ in 0..probes {
        let fiber: Vec<f64> = (1..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        for gap in 0..partition.class_count() - 1 {
            let gap_lo = partition.slabs()[gap].intervals[0].hi;
            let gap_hi = partition.slabs()[gap + 1].intervals[0].lo;
            let width = gap_hi - gap_lo;
            let step = spacing.min(0.25 * width);
            let at = |x: f64| -> Result<Vec<f64>, CliError> {
                let mut z = Vec::with_capacity(d);
                z.push(x);
                z.extend_from_slice(&fiber);
                Ok(map.map(&z)?.coords)
            };
            let left_face = at(gap_lo)?;
            let right_face = at(gap_hi)?;
            lipschitz = lipschitz.max(l2(&left_face, &right_face) / width);
            max_jump = max_jump.max(l2(&at(gap_lo + step)?, &left_face));
            max_jump = max_jump.max(l2(&at(gap_hi - step)?, &right_face));
        }
    }
    let step = spacing.min(0.25 * (partition.slabs()[1].intervals[0].lo
        - partition.slabs()[0].intervals[0].hi));
    let bound = 1e-9 + lipschitz * step;
    Ok(ContinuityMetrics {
        probes,
        spacing: step,
        max_jump,
        lipschitz_estimate: lipschitz,
        bound,
        ok: max_jump <= bound,
    })
}

pub(crate) fn run(cfg: &MulticlassConfig, out: &Path) -> Result<ExperimentReport, CliError> {
    let mut timer = StageTimer::new();
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();

    let manifolds: Vec<_> = cfg
        .classes
        .iter()
        .map(|spec| spec.build())
        .collect::<Result<_, _>>()?;

    let mut generators = Vec::with_capacity(manifolds.len());
    let mut radius_bounds = Vec::with_capacity(manifolds.len());
    for (i, m) in manifolds.iter().enumerate() {
        let estimate = timer.stage("diameters", || {
            estimate_diameter(
                m,
                cfg.diameter_samples,
                cfg.diameter_k,
                derive_seed(cfg.seed, &format!("class {i} diameter")),
            )
        })?;
        radius_bounds.push(estimate.value);
        generators.push(build_generator(m, &chart_center(m), estimate.value)?);
    }

    let latent_dim = generators.iter().map(|g| g.latent_dim()).max().unwrap_or(1);
    let partition =
        build_multiclass_partition(cfg.classes.len(), cfg.delta, latent_dim)?;
    let map = build_multiclass_map(partition, generators)?;

    let removed = map.partition().removed_measure();
    let removed_equals_half_delta = removed == cfg.delta / 2.0;
    let removed_within_delta = removed <= cfg.delta;
    require(
        &mut failures,
        (removed - cfg.delta / 2.0).abs() <= 1e-12 * cfg.delta.max(1.0),
        format!("removed gap measure {removed} differs from delta/2 = {}", cfg.delta / 2.0),
    );
    require(
        &mut failures,
        removed_within_delta,
        format!("removed gap measure {removed} exceeds delta {}", cfg.delta),
    );

    let mut class_metrics = Vec::new();
    let mut class_clouds = Vec::new();
    for i in 0..cfg.classes.len() {
        let (image, sample) = timer.stage("class coverage", || -> Result<_, CliError> {
            let grid = map.class_grid(i, cfg.grid_resolution)?;
            let mut rows = Vec::with_capacity(grid.len());
            for z in &grid {
                rows.push(map.map(z)?.coords);
            }
            let image =
                PointCloud::from_rows(&rows)?.with_label(format!("class {i} image"));
            let chart = manifolds[i].sample_area_uniform(
                cfg.sample_count,
                derive_seed(cfg.seed, &format!("class {i} sample")),
            );
            let ambient = manifolds[i].embed_all(&chart)?;
            let sample =
                PointCloud::from_ambient(&ambient)?.with_label(format!("class {i} sample"));
            Ok((image, sample))
        })?;
        let distance = hausdorff(&image, &sample)?;
        let fineness = net_fineness(&sample)?;
        require(
            &mut failures,
            distance < cfg.epsilon,
            format!("class {i} hausdorff {distance:.6} not below target {}", cfg.epsilon),
        );
        class_metrics.push(ClassMetrics {
            manifold: cfg.classes[i].describe(),
            radius_bound: radius_bounds[i],
            hausdorff: distance,
            sample_fineness: fineness,
        });
        class_clouds.push((image, sample));
    }

    let spacing = 2.0 / cfg.grid_resolution as f64;
    let continuity = timer.stage("continuity", || {
        gap_continuity(&map, cfg.continuity_probes, spacing, cfg.seed)
    })?;
    require(
        &mut failures,
        continuity.ok,
        format!(
            "gap-face jump {:.3e} exceeds continuity bound {:.3e}",
            continuity.max_jump, continuity.bound
        ),
    );

    timer.stage("artifacts", || -> Result<(), CliError> {
        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];
        let mut series = Vec::new();
        for (i, (image, sample)) in class_clouds.iter().enumerate() {
            image.write_csv(&out.join(format!("class-{i}-image.csv")))?;
            artifacts.push(format!("class-{i}-image.csv"));
            sample.write_csv(&out.join(format!("class-{i}-sample.csv")))?;
            artifacts.push(format!("class-{i}-sample.csv"));
            series.push((format!("class {i} sample"), sample, palette[(2 * i) % palette.len()]));
            series.push((
                format!("class {i} image"),
                image,
                palette[(2 * i + 1) % palette.len()],
            ));
        }
        let series_refs: Vec<Series> = series
            .iter()
            .map(|(label, cloud, color)| Series { label, cloud, color })
            .collect();
        scatter_svg(&out.join("multiclass.svg"), "multiclass map", &series_refs)?;
        artifacts.push("multiclass.svg".to_string());
        Ok(())
    })?;

    let metrics = Metrics {
        class_count: cfg.classes.len(),
        latent_dim,
        delta: cfg.delta,
        gap_half_width: map.partition().gap_half_width(),
        removed_measure: removed,
        removed_equals_half_delta,
        removed_within_delta,
        grid_resolution: cfg.grid_resolution,
        sample_count: cfg.sample_count,
        epsilon: cfg.epsilon,
        classes: class_metrics,
        continuity,
    };
    assemble("multiclass", cfg, &metrics, failures, artifacts, timer.finish())
}
