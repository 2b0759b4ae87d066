//! Numerical laboratory for geometric properties of generative maps.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`manifold`] defines embedded manifolds through charts and exposes
//!    differential-geometric quantities (metric, Christoffel symbols, volume).
//! 2. [`geodesic`] integrates the geodesic equation and provides the
//!    exponential map.
//! 3. [`generator`] builds smooth surjections from a latent cube onto a
//!    manifold by composing a linear frame map with the exponential map, and
//!    extends them to multi-component targets.
//! 4. [`hausdorff`] certifies how close two point clouds are, with an
//!    accelerated index that is exact with respect to the brute-force answer.
//! 5. [`neural`] is a small self-contained network stack (dense, circular
//!    convolution, circular transposed convolution) with reverse-mode
//!    gradients and deterministic training.
//! 6. [`expanding`] materializes convolution layers as matrices and decides
//!    numerically whether a layer or network is an embedding.
//! 7. [`cycle`] trains and evaluates forward/backward map pairs between two
//!    manifolds after excising a small-measure set from the chart.
//!
//! All randomness flows through [`rng`]: every public entry point that draws
//! random numbers takes an explicit seed, and repeated runs with the same
//! seed produce bit-identical results on a given machine.

pub mod cycle;
pub mod error;
pub mod expanding;
pub mod generator;
pub mod geodesic;
pub mod hausdorff;
pub mod linalg;
pub mod manifold;
pub mod neural;
pub mod rng;

pub use cycle::{
    build_chart_subset, evaluate_cycle, ground_truth_diffeo, holdout_fit, train_cycle,
    ChartSubset, CyclePair, CycleReport, CycleTrainConfig, GroundTruthDiffeo,
};
pub use error::{Error, Result};
pub use expanding::{
    build_conv_matrix, check_layer, check_network_injectivity, count_rank_deficient_draws,
    delta_kernel, numeric_rank, rank_is_stable, ConvMatrix, EmbeddingVerdict, InjectivityReport,
    RankReport, Verdict,
};
pub use generator::{
    build_generator, build_multiclass_map, build_multiclass_partition, estimate_diameter,
    latent_points, surjectivity_report, verify_surjectivity, DiameterEstimate, GeneratorMap,
    MulticlassGenerator, SlabLocation, SlabPartition, SurjectivityReport,
};
pub use geodesic::{
    exp_map, exp_map_numeric, integrate_geodesic, speed_drift, GeodesicState, GeodesicTrajectory,
};
pub use hausdorff::{
    brute_force_hausdorff, directed_hausdorff, hausdorff, net_fineness, PointCloud,
};
pub use manifold::{
    AmbientPoint, BoxRegion, ChartPoint, ChristoffelSymbols, EmbeddedManifold, Interval,
    MetricTensor, TangentVector,
};
pub use neural::{
    conv_apply, conv_transpose_apply, evaluate_mse, train_regression, Activation, Gradients,
    Layer, LayerGrads, LayerKind, Network, Optimizer, TrainConfig, TrainReport,
};
