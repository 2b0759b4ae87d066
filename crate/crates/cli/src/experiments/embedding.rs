//! Convolution shape sweep: matrix faithfulness, transpose duality, and
//! rank behavior of expanding layers, plus a deep-network Jacobian probe.

use crate::config::EmbeddingCheckConfig;
use crate::experiments::{assemble, require};
use crate::report::{ExperimentReport, StageTimer};
use crate::CliError;
use geogen::rng::{derive_seed, stage_rng};
use geogen::{
    build_conv_matrix, check_layer, check_network_injectivity, conv_apply, conv_transpose_apply,
    count_rank_deficient_draws, delta_kernel, numeric_rank, Activation, Layer, LayerKind,
    Network, Verdict,
};
use rand::Rng;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct NetworkStage {
    layers: Vec<LayerKind>,
    latent_dim: usize,
    jacobian_samples: usize,
    min_rank: usize,
    deficient_samples: usize,
    rank_stable: bool,
    outputs_pairwise_distinct: bool,
}

#[derive(Serialize)]
struct Metrics {
    conv_shapes_checked: usize,
    transpose_shapes_checked: usize,
    /// Parameter combinations whose geometry is impossible (kernel wider
    /// than the torus, stride not dividing the spatial size).
    shapes_skipped: usize,
    matvec_probes: usize,
    matvec_tolerance: f64,
    max_matvec_error: f64,
    duality_max_deviation: f64,
    duality_exact: bool,
    expanding_shapes: usize,
    delta_witness_full_rank: bool,
    delta_witness_failures: Vec<String>,
    redraw_trials: usize,
    rank_deficient_draws: usize,
    non_expanding_shapes: usize,
    non_expanding_all_rejected: bool,
    network: NetworkStage,
}

fn random_input(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct GridOutcome {
    conv_shapes: usize,
    transpose_shapes: usize,
    skipped: usize,
    max_matvec_error: f64,
    duality_max_deviation: f64,
    expanding_shapes: usize,
    delta_failures: Vec<String>,
    rank_deficient_draws: usize,
    non_expanding_shapes: usize,
    non_expanding_rejected: usize,
}

fn sweep_grid(cfg: &EmbeddingCheckConfig) -> Result<GridOutcome, CliError> {
    let mut out = GridOutcome {
        conv_shapes: 0,
        transpose_shapes: 0,
        skipped: 0,
        max_matvec_error: 0.0,
        duality_max_deviation: 0.0,
        expanding_shapes: 0,
        delta_failures: Vec::new(),
        rank_deficient_draws: 0,
        non_expanding_shapes: 0,
        non_expanding_rejected: 0,
    };
    for &m in &cfg.spatial {
        for &k in &cfg.channels {
            for &l in &cfg.channels {
                for &s in &cfg.kernels {
                    for &stride in &cfg.strides {
                        let tag = format!("m{m} k{k} l{l} s{s} stride{stride}");
                        let mut rng = stage_rng(cfg.seed, &format!("shape {tag}"));

                        let conv_valid = m % stride == 0 && s <= m;
                        if conv_valid {
                            out.conv_shapes += 1;
                            let kind = LayerKind::Conv {
                                in_channels: k,
                                out_channels: l,
                                spatial: m,
                                kernel: s,
                                stride,
                            };
                            let layer =
                                Layer::initialized(kind, Activation::Identity, &mut rng)?;
                            let matrix = build_conv_matrix(&layer)?;
                            for _ in 0..cfg.matvec_probes {
                                let x = random_input(&mut rng, kind.input_dim());
                                let direct =
                                    conv_apply(layer.weights(), l, k, s, stride, &x, m)?;
                                let via_matrix = matrix.matvec(&x)?;
                                out.max_matvec_error = out
                                    .max_matvec_error
                                    .max(max_abs_diff(&direct, &via_matrix));
                            }

                            let n = m / stride;
                            let expanding = n * n * l >= m * m * k;
                            if expanding {
                                out.expanding_shapes += 1;
                                let witness = Layer::new(
                                    kind,
                                    Activation::Identity,
                                    delta_kernel(l, k, s)?,
                                    vec![0.0; l],
                                )?;
                                let wm = build_conv_matrix(&witness)?;
                                let rank = numeric_rank(&wm.matrix.view(), None);
                                if rank.numeric_rank != m * m * k {
                                    out.delta_failures.push(format!(
                                        "conv {tag}: delta witness rank {} of {}",
                                        rank.numeric_rank,
                                        m * m * k
                                    ));
                                }
                                out.rank_deficient_draws += count_rank_deficient_draws(
                                    kind,
                                    cfg.redraw_trials,
                                    derive_seed(cfg.seed, &format!("redraws {tag}")),
                                )?;
                            } else {
                                out.non_expanding_shapes += 1;
                                let verdict = check_layer(&layer, 1, cfg.seed)?;
                                if verdict.verdict == Verdict::NotExpanding {
                                    out.non_expanding_rejected += 1;
                                }
                            }
                        } else {
                            out.skipped += 1;
                        }

                        let transpose_valid = s <= m * stride;
                        if transpose_valid {
                            out.transpose_shapes += 1;
                            let kind = LayerKind::ConvTranspose {
                                in_channels: k,
                                out_channels: l,
                                spatial: m,
                                kernel: s,
                                stride,
                            };
                            let layer =
                                Layer::initialized(kind, Activation::Identity, &mut rng)?;
                            let matrix = build_conv_matrix(&layer)?;
                            for _ in 0..cfg.matvec_probes {
                                let x = random_input(&mut rng, kind.input_dim());
                                let direct = conv_transpose_apply(
                                    layer.weights(),
                                    k,
                                    l,
                                    s,
                                    stride,
                                    &x,
                                    m,
                                )?;
                                let via_matrix = matrix.matvec(&x)?;
                                out.max_matvec_error = out
                                    .max_matvec_error
                                    .max(max_abs_diff(&direct, &via_matrix));
                            }
                            // The transposed layer's matrix must be exactly
                            // the transpose of the conv that shares its
                            // kernel buffer.
                            let adjoint = Layer::new(
                                LayerKind::Conv {
                                    in_channels: l,
                                    out_channels: k,
                                    spatial: m * stride,
                                    kernel: s,
                                    stride,
                                },
                                Activation::Identity,
                                layer.weights().to_vec(),
                                vec![0.0; k],
                            )?;
                            let am = build_conv_matrix(&adjoint)?;
                            let rows = matrix.matrix.nrows();
                            let cols = matrix.matrix.ncols();
                            let mut dev = 0.0f64;
                            for r in 0..rows {
                                for c in 0..cols {
                                    dev = dev
                                        .max((matrix.matrix[[r, c]] - am.matrix[[c, r]]).abs());
                                }
                            }
                            out.duality_max_deviation = out.duality_max_deviation.max(dev);
                        } else {
                            out.skipped += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Fixed three-layer expanding tanh probe: dense, circular convolution,
/// dense, every layer strictly widening.
fn probe_network(seed: u64) -> Result<Network, CliError> {
    let specs = [
        (LayerKind::Dense { input: 2, output: 18 }, Activation::Tanh),
        (
            LayerKind::Conv { in_channels: 2, out_channels: 3, spatial: 3, kernel: 2, stride: 1 },
            Activation::Tanh,
        ),
        (LayerKind::Dense { input: 27, output: 40 }, Activation::Tanh),
    ];
    Ok(Network::new(&specs, derive_seed(seed, "probe network"))?)
}

pub(crate) fn run(cfg: &EmbeddingCheckConfig, out: &Path) -> Result<ExperimentReport, CliError> {
    let _ = out;
    let mut timer = StageTimer::new();
    let mut failures = Vec::new();

    let grid = timer.stage("shape grid", || sweep_grid(cfg))?;

    require(
        &mut failures,
        grid.max_matvec_error <= cfg.matvec_tolerance,
        format!(
            "matrix/direct deviation {:.3e} exceeds tolerance {:.1e}",
            grid.max_matvec_error, cfg.matvec_tolerance
        ),
    );
    require(
        &mut failures,
        grid.duality_max_deviation == 0.0,
        format!("transpose duality deviates by {:.3e}", grid.duality_max_deviation),
    );
    require(
        &mut failures,
        grid.delta_failures.is_empty(),
        format!("delta witness lost rank on {} shapes", grid.delta_failures.len()),
    );
    require(
        &mut failures,
        grid.rank_deficient_draws == 0,
        format!("{} random redraws lost rank", grid.rank_deficient_draws),
    );
    require(
        &mut failures,
        grid.non_expanding_rejected == grid.non_expanding_shapes,
        format!(
            "{} of {} non-expanding shapes were not rejected",
            grid.non_expanding_shapes - grid.non_expanding_rejected,
            grid.non_expanding_shapes
        ),
    );

    let (network, injectivity) = timer.stage("network jacobian", || -> Result<_, CliError> {
        let network = probe_network(cfg.seed)?;
        let mut rng = stage_rng(cfg.seed, "jacobian latents");
        let samples: Vec<Vec<f64>> = (0..cfg.jacobian_samples)
            .map(|_| random_input(&mut rng, network.input_dim()))
            .collect();
        let report = check_network_injectivity(
            &network,
            &samples,
            derive_seed(cfg.seed, "jacobian check"),
        )?;
        Ok((network, report))
    })?;

    require(
        &mut failures,
        injectivity.min_rank == network.input_dim(),
        format!(
            "probe network jacobian rank {} below latent dimension {}",
            injectivity.min_rank,
            network.input_dim()
        ),
    );
    require(
        &mut failures,
        injectivity.deficient_samples.is_empty(),
        format!(
            "{} latent points had rank-deficient jacobians",
            injectivity.deficient_samples.len()
        ),
    );
    require(
        &mut failures,
        injectivity.rank_stable,
        "jacobian rank changed under 10x tolerance shift".to_string(),
    );

    let metrics = Metrics {
        conv_shapes_checked: grid.conv_shapes,
        transpose_shapes_checked: grid.transpose_shapes,
        shapes_skipped: grid.skipped,
        matvec_probes: cfg.matvec_probes,
        matvec_tolerance: cfg.matvec_tolerance,
        max_matvec_error: grid.max_matvec_error,
        duality_max_deviation: grid.duality_max_deviation,
        duality_exact: grid.duality_max_deviation == 0.0,
        expanding_shapes: grid.expanding_shapes,
        delta_witness_full_rank: grid.delta_failures.is_empty(),
        delta_witness_failures: grid.delta_failures,
        redraw_trials: cfg.redraw_trials,
        rank_deficient_draws: grid.rank_deficient_draws,
        non_expanding_shapes: grid.non_expanding_shapes,
        non_expanding_all_rejected: grid.non_expanding_rejected == grid.non_expanding_shapes,
        network: NetworkStage {
            layers: network.layers().iter().map(|l| l.kind).collect(),
            latent_dim: network.input_dim(),
            jacobian_samples: cfg.jacobian_samples,
            min_rank: injectivity.min_rank,
            deficient_samples: injectivity.deficient_samples.len(),
            rank_stable: injectivity.rank_stable,
            outputs_pairwise_distinct: injectivity.outputs_pairwise_distinct,
        },
    };
    assemble("embedding-check", cfg, &metrics, failures, Vec::new(), timer.finish())
}
