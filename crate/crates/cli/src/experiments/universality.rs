//! Generator coverage of one manifold, plus optional shallow-network
//! imitation of the generator.

use crate::config::UniversalityConfig;
use crate::experiments::{assemble, l2, require};
use crate::plot::{scatter_svg, Series};
use crate::report::{ExperimentReport, StageTimer};
use crate::CliError;
use geogen::rng::{derive_seed, HaltonSequence};
use geogen::{
    build_generator, estimate_diameter, hausdorff, latent_points, net_fineness,
    surjectivity_report, verify_surjectivity, Activation, ChartPoint, GeneratorMap, LayerKind,
    Network, PointCloud, TrainConfig,
};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct NetworkMetrics {
    hidden_width: usize,
    parameter_count: usize,
    train_samples: usize,
    epochs_requested: usize,
    epochs_run: usize,
    final_loss: f64,
    /// Largest ambient error against the exact generator on the held-out
    /// evaluation grid.
    max_pointwise_error: f64,
    hausdorff: f64,
    epsilon: f64,
    image_fineness: f64,
}

#[derive(Serialize)]
struct Metrics {
    manifold: String,
    latent_dim: usize,
    ambient_dim: usize,
    radius_bound: f64,
    grid_resolution: usize,
    grid_point_count: usize,
    sample_count: usize,
    sample_fineness: f64,
    surjectivity_hausdorff: f64,
    surjectivity_epsilon: f64,
    doubled_resolution: usize,
    doubled_sample_count: usize,
    surjectivity_hausdorff_doubled: f64,
    doubling_reduced_distance: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    network: Option<NetworkMetrics>,
}

/// Deterministic base point: the center of the chart domain.
pub(crate) fn chart_center(m: &geogen::EmbeddedManifold) -> ChartPoint {
    let coords = m
        .chart_domain()
        .intervals
        .iter()
        .map(|iv| 0.5 * (iv.lo + iv.hi))
        .collect();
    ChartPoint::new(coords)
}

/// Shifted low-discrepancy training inputs, disjoint from the tensor
/// evaluation grid so fit errors are measured out of sample.
fn training_latents(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut seq = HaltonSequence::new(d, seed);
    seq.take_points(count)
        .into_iter()
        .map(|u| u.into_iter().map(|x| 2.0 * x - 1.0).collect())
        .collect()
}

pub(crate) struct TrainedImitation {
    pub network: Network,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
}

/// Fits `1 hidden tanh layer -> identity` to the generator map.
pub(crate) fn train_imitation(
    generator: &GeneratorMap,
    hidden_width: usize,
    train_samples: usize,
    train: TrainConfig,
    seed: u64,
) -> Result<TrainedImitation, CliError> {
    let d = generator.latent_dim();
    let ambient = generator.ambient_dim();
    let inputs = training_latents(d, train_samples, derive_seed(seed, "train latents"));
    let mut targets = Vec::with_capacity(inputs.len());
    for z in &inputs {
        targets.push(generator.map(z)?.coords);
    }
    let mut network = Network::new(
        &[
            (LayerKind::Dense { input: d, output: hidden_width }, Activation::Tanh),
            (LayerKind::Dense { input: hidden_width, output: ambient }, Activation::Identity),
        ],
        derive_seed(seed, "network"),
    )?;
    let report = geogen::train_regression(&mut network, &inputs, &targets, &train)?;
    Ok(TrainedImitation {
        network,
        epochs_run: report.epochs_run,
        final_loss: report.final_loss,
        loss_history: report.loss_history,
    })
}

pub(crate) fn run(cfg: &UniversalityConfig, out: &Path) -> Result<ExperimentReport, CliError> {
    let mut timer = StageTimer::new();
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();

    let manifold = cfg.manifold.build()?;
    let estimate = timer.stage("diameter", || {
        estimate_diameter(
            &manifold,
            cfg.diameter_samples,
            cfg.diameter_k,
            derive_seed(cfg.seed, "diameter"),
        )
    })?;
    let generator = build_generator(&manifold, &chart_center(&manifold), estimate.value)?;

    let surjectivity_seed = derive_seed(cfg.seed, "surjectivity");
    let coverage = timer.stage("surjectivity", || {
        surjectivity_report(&generator, cfg.grid_resolution, cfg.sample_count, surjectivity_seed)
    })?;
    // Doubling halves the length scale of the whole comparison: twice the
    // grid points per axis, and a sample fine enough to match (count scaled
    // by 2^d). Refining only the grid would converge upward to the fixed
    // sample's covering radius instead of shrinking.
    let doubled_resolution = 2 * cfg.grid_resolution;
    let doubled_sample_count = cfg.sample_count << generator.latent_dim();
    let distance_doubled = timer.stage("surjectivity doubled", || {
        verify_surjectivity(&generator, doubled_resolution, doubled_sample_count, surjectivity_seed)
    })?;

    let sample_fineness = net_fineness(&coverage.manifold_sample)?;
    require(
        &mut failures,
        coverage.distance < cfg.surjectivity_epsilon,
        format!(
            "surjectivity hausdorff {:.6} not below target {}",
            coverage.distance, cfg.surjectivity_epsilon
        ),
    );
    require(
        &mut failures,
        distance_doubled < coverage.distance,
        format!(
            "doubling resolution did not reduce the coverage distance ({:.6} vs {:.6})",
            distance_doubled, coverage.distance
        ),
    );

    let mut network_metrics = None;
    let mut network_image: Option<PointCloud> = None;
    if let Some(train) = &cfg.train {
        let fitted = timer.stage("training", || {
            train_imitation(
                &generator,
                train.hidden_width,
                train.train_samples,
                TrainConfig {
                    learning_rate: train.learning_rate,
                    epochs: train.epochs,
                    batch_size: train.batch_size,
                    seed: derive_seed(cfg.seed, "training"),
                    optimizer: train.optimizer,
                    target_loss: train.target_loss,
                },
                cfg.seed,
            )
        })?;

        let (image, max_err) = timer.stage("evaluation", || -> Result<_, CliError> {
            let grid = latent_points(
                generator.latent_dim(),
                cfg.grid_resolution,
                derive_seed(cfg.seed, "evaluation grid"),
            )?;
            let mut rows = Vec::with_capacity(grid.len());
            let mut max_err = 0.0f64;
            for z in &grid {
                let predicted = fitted.network.forward(z)?;
                let exact = generator.map(z)?;
                max_err = max_err.max(l2(&predicted, &exact.coords));
                rows.push(predicted);
            }
            let image = PointCloud::from_rows(&rows)?.with_label("network image");
            Ok((image, max_err))
        })?;

        let image_hausdorff = hausdorff(&image, &coverage.manifold_sample)?;
        let image_fineness = net_fineness(&image)?;
        require(
            &mut failures,
            image_hausdorff < train.epsilon,
            format!(
                "network hausdorff {image_hausdorff:.6} not below target {}",
                train.epsilon
            ),
        );

        let ckpt = out.join("network.ckpt");
        fitted.network.save_checkpoint(&ckpt)?;
        artifacts.push("network.ckpt".to_string());
        let loss_rows: Vec<Vec<f64>> = fitted
            .loss_history
            .iter()
            .enumerate()
            .map(|(i, &loss)| vec![(i + 1) as f64, loss])
            .collect();
        PointCloud::from_rows(&loss_rows)?
            .with_label("epoch loss")
            .write_csv(&out.join("training-loss.csv"))?;
        artifacts.push("training-loss.csv".to_string());

        network_metrics = Some(NetworkMetrics {
            hidden_width: train.hidden_width,
            parameter_count: fitted.network.parameter_count(),
            train_samples: train.train_samples,
            epochs_requested: train.epochs,
            epochs_run: fitted.epochs_run,
            final_loss: fitted.final_loss,
            max_pointwise_error: max_err,
            hausdorff: image_hausdorff,
            epsilon: train.epsilon,
            image_fineness,
        });
        network_image = Some(image);
    }

    timer.stage("artifacts", || -> Result<(), CliError> {
        coverage.manifold_sample.write_csv(&out.join("manifold-sample.csv"))?;
        artifacts.push("manifold-sample.csv".to_string());
        coverage.image.write_csv(&out.join("generator-image.csv"))?;
        artifacts.push("generator-image.csv".to_string());
        if let Some(image) = &network_image {
            image.write_csv(&out.join("network-image.csv"))?;
            artifacts.push("network-image.csv".to_string());
        }
        let mut series = vec![
            Series { label: "manifold sample", cloud: &coverage.manifold_sample, color: "#1f77b4" },
        ];
        match &network_image {
            Some(image) => {
                series.push(Series { label: "network image", cloud: image, color: "#d62728" })
            }
            None => series.push(Series {
                label: "generator image",
                cloud: &coverage.image,
                color: "#ff7f0e",
            }),
        }
        scatter_svg(&out.join("universality.svg"), "universality", &series)?;
        artifacts.push("universality.svg".to_string());
        Ok(())
    })?;

    let metrics = Metrics {
        manifold: cfg.manifold.describe(),
        latent_dim: generator.latent_dim(),
        ambient_dim: generator.ambient_dim(),
        radius_bound: estimate.value,
        grid_resolution: cfg.grid_resolution,
        grid_point_count: coverage.image.len(),
        sample_count: cfg.sample_count,
        sample_fineness,
        surjectivity_hausdorff: coverage.distance,
        surjectivity_epsilon: cfg.surjectivity_epsilon,
        doubled_resolution,
        doubled_sample_count,
        surjectivity_hausdorff_doubled: distance_doubled,
        doubling_reduced_distance: distance_doubled < coverage.distance,
        network: network_metrics,
    };
    assemble("universality", cfg, &metrics, failures, artifacts, timer.finish())
}
