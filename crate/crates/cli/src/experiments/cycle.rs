//! Chart-to-chart cycle experiment: carve measure-δ subsets out of two
//! manifolds, train a forward/backward network pair against the closed-form
//! correspondence, and certify the round-trip bound.

use crate::config::CycleConfig;
use crate::experiments::{assemble, l2, require};
use crate::plot::{self, Series};
use crate::report::{ExperimentReport, StageTimer};
use crate::CliError;
use geogen::rng::derive_seed;
use geogen::{
    build_chart_subset, evaluate_cycle, ground_truth_diffeo, train_cycle, ChartSubset,
    CycleReport, CycleTrainConfig, PointCloud, TrainConfig,
};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct SubsetMetrics {
    manifold: String,
    total_volume: f64,
    measure_deficit: f64,
    kept_fraction: f64,
    quadrature_resolution: usize,
}

#[derive(Serialize)]
struct TrainingMetrics {
    epochs_requested: usize,
    forward_epochs_run: usize,
    backward_epochs_run: usize,
    forward_final_loss: f64,
    backward_final_loss: f64,
    fit_forward: f64,
    fit_backward: f64,
    fit_eps: f64,
    fit_epsilon: f64,
}

#[derive(Serialize)]
struct Metrics {
    source: SubsetMetrics,
    target: SubsetMetrics,
    delta: f64,
    deficits_within_delta: bool,
    roundtrip_samples: usize,
    roundtrip_max_error: f64,
    roundtrip_tolerance: f64,
    training: TrainingMetrics,
    evaluation: CycleReport,
    lipschitz_note: String,
}

fn subset_metrics(sub: &ChartSubset, name: &str) -> SubsetMetrics {
    SubsetMetrics {
        manifold: name.to_string(),
        total_volume: sub.total_volume(),
        measure_deficit: sub.measure_deficit(),
        kept_fraction: (sub.total_volume() - sub.measure_deficit()) / sub.total_volume(),
        quadrature_resolution: sub.quadrature_resolution(),
    }
}

pub(crate) fn run(cfg: &CycleConfig, out: &Path) -> Result<ExperimentReport, CliError> {
    let mut timer = StageTimer::new();
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();

    let src_m = cfg.source.build()?;
    let dst_m = cfg.target.build()?;
    let src_sub = timer.stage("source subset", || build_chart_subset(&src_m, cfg.delta))?;
    let dst_sub = timer.stage("target subset", || build_chart_subset(&dst_m, cfg.delta))?;

    let deficits_ok =
        src_sub.measure_deficit() < cfg.delta && dst_sub.measure_deficit() < cfg.delta;
    require(
        &mut failures,
        deficits_ok,
        format!(
            "excluded measure ({:.3e}, {:.3e}) not below budget {}",
            src_sub.measure_deficit(),
            dst_sub.measure_deficit(),
            cfg.delta
        ),
    );

    let (roundtrip_max, truth) = timer.stage("ground truth", || -> Result<_, CliError> {
        let truth = ground_truth_diffeo(&src_sub, &dst_sub)?;
        let pts = src_sub.sample(cfg.roundtrip_samples, derive_seed(cfg.seed, "roundtrip sample"))?;
        let mut worst = 0.0_f64;
        for x in src_sub.embed_all(&pts) {
            let back = truth.backward(&truth.forward(&x)?)?;
            worst = worst.max(l2(&x, &back));
        }
        Ok((worst, truth))
    })?;
    let _ = truth;
    require(
        &mut failures,
        roundtrip_max <= cfg.roundtrip_tolerance,
        format!(
            "ground-truth round trip drifts {:.3e} > {:.1e}",
            roundtrip_max, cfg.roundtrip_tolerance
        ),
    );

    let train_config = CycleTrainConfig {
        hidden: cfg.hidden.clone(),
        activation: cfg.activation,
        train_samples: cfg.train_samples,
        holdout_resolution: cfg.holdout_resolution,
        train: TrainConfig {
            learning_rate: cfg.learning_rate,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            seed: derive_seed(cfg.seed, "cycle training"),
            optimizer: cfg.optimizer,
            target_loss: cfg.target_loss,
        },
    };
    let pair = timer.stage("training", || train_cycle(&src_sub, &dst_sub, &train_config))?;
    require(
        &mut failures,
        pair.fit_eps() < cfg.fit_epsilon,
        format!("held-out fit {:.4} not below {}", pair.fit_eps(), cfg.fit_epsilon),
    );

    let evaluation = timer.stage("evaluation", || {
        evaluate_cycle(&pair, cfg.eval_samples, derive_seed(cfg.seed, "cycle evaluation"))
    })?;
    require(
        &mut failures,
        evaluation.bound_ok,
        format!(
            "composition error ({:.4}, {:.4}) exceeds (1 + sampled Lipschitz) * fit bound ({:.4}, {:.4})",
            evaluation.composition_error_fwd,
            evaluation.composition_error_bwd,
            evaluation.bound_fwd,
            evaluation.bound_bwd
        ),
    );

    timer.stage("artifacts", || -> Result<(), CliError> {
        pair.forward_net.save_checkpoint(&out.join("forward-net.ckpt"))?;
        artifacts.push("forward-net.ckpt".to_string());
        pair.backward_net.save_checkpoint(&out.join("backward-net.ckpt"))?;
        artifacts.push("backward-net.ckpt".to_string());

        let src_pts =
            src_sub.sample(cfg.eval_samples, derive_seed(cfg.seed, "artifact source"))?;
        let dst_pts =
            dst_sub.sample(cfg.eval_samples, derive_seed(cfg.seed, "artifact target"))?;
        let src_rows = src_sub.embed_all(&src_pts);
        let dst_rows = dst_sub.embed_all(&dst_pts);
        let forward_rows: Result<Vec<Vec<f64>>, geogen::Error> =
            src_rows.iter().map(|x| pair.forward_net.forward(x)).collect();
        let backward_rows: Result<Vec<Vec<f64>>, geogen::Error> =
            dst_rows.iter().map(|y| pair.backward_net.forward(y)).collect();

        let source_cloud = PointCloud::from_rows(&src_rows)?.with_label("source sample");
        let target_cloud = PointCloud::from_rows(&dst_rows)?.with_label("target sample");
        let forward_cloud = PointCloud::from_rows(&forward_rows?)?.with_label("forward image");
        let backward_cloud = PointCloud::from_rows(&backward_rows?)?.with_label("backward image");

        for (cloud, name) in [
            (&source_cloud, "source-sample.csv"),
            (&target_cloud, "target-sample.csv"),
            (&forward_cloud, "forward-image.csv"),
            (&backward_cloud, "backward-image.csv"),
        ] {
            cloud.write_csv(&out.join(name))?;
            artifacts.push(name.to_string());
        }

        plot::scatter_svg(
            &out.join("cycle.svg"),
            "trained forward map vs target manifold",
            &[
                Series { label: "target sample", cloud: &target_cloud, color: "#1f77b4" },
                Series { label: "forward image", cloud: &forward_cloud, color: "#d62728" },
            ],
        )?;
        artifacts.push("cycle.svg".to_string());
        Ok(())
    })?;

    let metrics = Metrics {
        source: subset_metrics(&src_sub, &cfg.source.describe()),
        target: subset_metrics(&dst_sub, &cfg.target.describe()),
        delta: cfg.delta,
        deficits_within_delta: deficits_ok,
        roundtrip_samples: cfg.roundtrip_samples,
        roundtrip_max_error: roundtrip_max,
        roundtrip_tolerance: cfg.roundtrip_tolerance,
        training: TrainingMetrics {
            epochs_requested: cfg.epochs,
            forward_epochs_run: pair.train_forward.as_ref().map_or(0, |t| t.epochs_run),
            backward_epochs_run: pair.train_backward.as_ref().map_or(0, |t| t.epochs_run),
            forward_final_loss: pair.train_forward.as_ref().map_or(0.0, |t| t.final_loss),
            backward_final_loss: pair.train_backward.as_ref().map_or(0.0, |t| t.final_loss),
            fit_forward: pair.fit_forward,
            fit_backward: pair.fit_backward,
            fit_eps: pair.fit_eps(),
            fit_epsilon: cfg.fit_epsilon,
        },
        evaluation,
        lipschitz_note: "Lipschitz constants are sampled maxima of operator norms over the \
                         evaluation clouds, not certified global bounds"
            .to_string(),
    };
    assemble("cycle", cfg, &metrics, failures, artifacts, timer.finish())
}
