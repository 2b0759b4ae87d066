//! Expanding-layer analysis: materializes circular (transposed) convolutions
//! as explicit matrices, measures numeric rank, and decides whether layers
//! and whole networks behave as embeddings.
//!
//! A layer is expanding when its output dimension is at least its input
//! dimension. For such a layer with an injective linear part and a smooth
//! strictly monotone activation, the layer map is injective; a chain of
//! such layers restricted to a compact latent set is an embedding. The
//! checks here are numerical evidence at sample points, not proofs.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::neural::{Activation, Layer, LayerKind, Network};
use crate::rng::{derive_seed, seeded_rng};

/// Dense materialization of a convolutional layer's linear part.
///
/// Rows index outputs, columns index inputs, both in the channel-major
/// vectorization used by the neural module. Bias and activation are not
/// part of the matrix.
#[derive(Debug, Clone)]
pub struct ConvMatrix {
    pub matrix: Array2<f64>,
    pub source_layer: LayerKind,
}

impl ConvMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Plain matrix-vector product against a vectorized input.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.matrix.ncols() {
            return Err(Error::Shape(format!(
                "matvec input has {} entries, matrix expects {}",
                x.len(),
                self.matrix.ncols()
            )));
        }
        let mut out = vec![0.0; self.matrix.nrows()];
        for (r, row) in self.matrix.rows().into_iter().enumerate() {
            let mut acc = 0.0;
            for (c, &v) in row.iter().enumerate() {
                acc += v * x[c];
            }
            out[r] = acc;
        }
        Ok(out)
    }
}

fn conv_matrix_entries(
    kernel: &[f64],
    out_ch: usize,
    in_ch: usize,
    ksize: usize,
    stride: usize,
    spatial: usize,
) -> Array2<f64> {
    let n = spatial / stride;
    let mut mat = Array2::zeros((out_ch * n * n, in_ch * spatial * spatial));
    for c in 0..out_ch {
        for cp in 0..in_ch {
            let kbase = (c * in_ch + cp) * ksize * ksize;
            for i in 0..n {
                for j in 0..n {
                    let row_idx = (c * n + i) * n + j;
                    for p in 0..ksize {
                        let rr = (i * stride + p) % spatial;
                        for q in 0..ksize {
                            let cc = (j * stride + q) % spatial;
                            // += because a kernel longer than the spatial
                            // side wraps onto cells it already touched.
                            mat[[row_idx, (cp * spatial + rr) * spatial + cc]] +=
                                kernel[kbase + p * ksize + q];
                        }
                    }
                }
            }
        }
    }
    mat
}

/// Materializes a conv or conv_transpose layer as the explicit matrix of
/// its linear part. A transposed convolution yields exactly the entrywise
/// transpose of the matching convolution's matrix (same kernel tensor,
/// channel roles swapped, spatial side scaled by the stride).
pub fn build_conv_matrix(layer: &Layer) -> Result<ConvMatrix> {
    match layer.kind {
        LayerKind::Dense { .. } => Err(Error::InvalidArgument(
            "build_conv_matrix expects a conv or conv_transpose layer".into(),
        )),
        LayerKind::Conv { in_channels, out_channels, spatial, kernel, stride } => Ok(ConvMatrix {
            matrix: conv_matrix_entries(
                layer.weights(),
                out_channels,
                in_channels,
                kernel,
                stride,
                spatial,
            ),
            source_layer: layer.kind,
        }),
        LayerKind::ConvTranspose { in_channels, out_channels, spatial, kernel, stride } => {
            let conv_side = conv_matrix_entries(
                layer.weights(),
                in_channels,
                out_channels,
                kernel,
                stride,
                spatial * stride,
            );
            Ok(ConvMatrix {
                matrix: conv_side.reversed_axes(),
                source_layer: layer.kind,
            })
        }
    }
}

/// The witness kernel in conv layout `[l][k][s][s]`: 1 on the channel
/// diagonal at the first spatial position, 0 elsewhere.
pub fn delta_kernel(l: usize, k: usize, s: usize) -> Result<Vec<f64>> {
    if l == 0 || k == 0 || s == 0 {
        return Err(Error::InvalidArgument(format!(
            "delta kernel needs positive dimensions, got l={l} k={k} s={s}"
        )));
    }
    let mut kernel = vec![0.0; l * k * s * s];
    for i in 0..l.min(k) {
        kernel[(i * k + i) * s * s] = 1.0;
    }
    Ok(kernel)
}

/// Outcome of rank-revealing elimination.
#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub numeric_rank: usize,
    pub tolerance: f64,
    pub full_rank: bool,
    /// Magnitude of the smallest pivot that was accepted; 0 when the rank
    /// is 0.
    pub min_retained_pivot: f64,
}

/// Gaussian elimination with complete pivoting; a pivot counts toward the
/// rank while its magnitude exceeds the tolerance. The default tolerance is
/// max(rows, cols) · ε · (largest absolute entry).
pub fn numeric_rank(matrix: &ArrayView2<f64>, tolerance: Option<f64>) -> RankReport {
    let (rows, cols) = matrix.dim();
    let mut m = matrix.to_owned();
    let max_entry = m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    let tol = tolerance.unwrap_or(rows.max(cols) as f64 * f64::EPSILON * max_entry);
    let mut rank = 0;
    let mut min_pivot = f64::INFINITY;
    for t in 0..rows.min(cols) {
        let mut pr = t;
        let mut pc = t;
        let mut pv = 0.0;
        for r in t..rows {
            for c in t..cols {
                let v = m[[r, c]].abs();
                if v > pv {
                    pv = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if pv <= tol || pv == 0.0 {
            break;
        }
        if pr != t {
            for c in 0..cols {
                m.swap([t, c], [pr, c]);
            }
        }
        if pc != t {
            for r in 0..rows {
                m.swap([r, t], [r, pc]);
            }
        }
        let piv = m[[t, t]];
        for r in t + 1..rows {
            let f = m[[r, t]] / piv;
            if f != 0.0 {
                for c in t..cols {
                    m[[r, c]] -= f * m[[t, c]];
                }
            }
        }
        rank += 1;
        min_pivot = min_pivot.min(pv);
    }
    RankReport {
        numeric_rank: rank,
        tolerance: tol,
        full_rank: rank == rows.min(cols),
        min_retained_pivot: if rank == 0 { 0.0 } else { min_pivot },
    }
}

/// True when the rank verdict survives widening the tolerance tenfold,
/// which rules out a pivot sitting right at the cutoff.
pub fn rank_is_stable(matrix: &ArrayView2<f64>) -> bool {
    let base = numeric_rank(matrix, None);
    let widened = numeric_rank(matrix, Some(base.tolerance * 10.0));
    base.numeric_rank == widened.numeric_rank
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Embedding,
    NotExpanding,
    RankDeficient,
    BadActivation,
}

/// Layer-level embedding decision and the evidence behind it.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingVerdict {
    pub expanding: bool,
    /// Full column rank of the materialized linear map, for the layer's own
    /// weights and for every random redraw.
    pub injective_linear_part: bool,
    pub activation_ok: bool,
    pub verdict: Verdict,
}

fn activation_qualifies(a: Activation) -> bool {
    // Smooth, monotone, derivative nonvanishing. Every catalog activation
    // qualifies; the gate exists so the verdict stays honest if the
    // catalog grows.
    match a {
        Activation::Tanh | Activation::Sigmoid | Activation::Identity => true,
    }
}

fn linear_part_matrix(kind: LayerKind, weights: &[f64]) -> Result<Array2<f64>> {
    match kind {
        LayerKind::Dense { input, output } => {
            Array2::from_shape_vec((output, input), weights.to_vec())
                .map_err(|e| Error::Shape(e.to_string()))
        }
        _ => {
            let layer = Layer::new(
                kind,
                Activation::Identity,
                weights.to_vec(),
                vec![0.0; kind.bias_count()],
            )?;
            Ok(build_conv_matrix(&layer)?.matrix)
        }
    }
}

fn gaussian_weights(count: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

/// Counts Gaussian redraws of the layer shape whose materialized linear map
/// is rank deficient (rank below min(rows, cols)).
pub fn count_rank_deficient_draws(kind: LayerKind, trials: usize, seed: u64) -> Result<usize> {
    let mut rng = seeded_rng(derive_seed(seed, "genericity draws"));
    let mut deficient = 0;
    for _ in 0..trials {
        let w = gaussian_weights(kind.weight_count(), &mut rng);
        let mat = linear_part_matrix(kind, &w)?;
        if !numeric_rank(&mat.view(), None).full_rank {
            deficient += 1;
        }
    }
    Ok(deficient)
}

/// Decides whether one layer is an embedding: expanding shape, injective
/// linear part (its own weights plus `trials` Gaussian redraws), and a
/// qualifying activation.
pub fn check_layer(layer: &Layer, trials: usize, seed: u64) -> Result<EmbeddingVerdict> {
    let kind = layer.kind;
    let expanding = kind.output_dim() >= kind.input_dim();
    let activation_ok = activation_qualifies(layer.activation);

    let input_dim = kind.input_dim();
    let own = linear_part_matrix(kind, layer.weights())?;
    let mut injective = numeric_rank(&own.view(), None).numeric_rank == input_dim;
    if injective {
        let mut rng = seeded_rng(derive_seed(seed, "layer redraws"));
        for _ in 0..trials {
            let w = gaussian_weights(kind.weight_count(), &mut rng);
            let mat = linear_part_matrix(kind, &w)?;
            if numeric_rank(&mat.view(), None).numeric_rank != input_dim {
                injective = false;
                break;
            }
        }
    }

    let verdict = if !expanding {
        Verdict::NotExpanding
    } else if !injective {
        Verdict::RankDeficient
    } else if !activation_ok {
        Verdict::BadActivation
    } else {
        Verdict::Embedding
    };
    Ok(EmbeddingVerdict {
        expanding,
        injective_linear_part: injective,
        activation_ok,
        verdict,
    })
}

/// Network-level injectivity evidence at sample points.
#[derive(Debug, Clone, Serialize)]
pub struct InjectivityReport {
    pub latent_dim: usize,
    pub sample_count: usize,
    /// Whether every layer has output dimension ≥ input dimension, the
    /// hypothesis the rank argument needs. Indices of offending layers
    /// follow.
    pub expanding_precondition: bool,
    pub non_expanding_layers: Vec<usize>,
    pub min_rank: usize,
    pub deficient_samples: Vec<usize>,
    /// Ranks unchanged when the elimination tolerance widens tenfold.
    pub rank_stable: bool,
    pub outputs_pairwise_distinct: bool,
    pub min_output_separation: f64,
    /// All of: precondition, full Jacobian rank everywhere, distinct
    /// outputs. Evidence for an embedding, not a proof.
    pub embedding_evidence: bool,
}

/// Checks Jacobian rank at each sample and pairwise output distinctness.
/// Deficiencies are reported in the result, never raised as errors; only
/// malformed inputs error. An empty sample list is replaced by 50 points
/// drawn uniformly from the latent cube with the given seed.
pub fn check_network_injectivity(
    net: &Network,
    sample_points: &[Vec<f64>],
    seed: u64,
) -> Result<InjectivityReport> {
    let latent_dim = net.input_dim();
    let samples: Vec<Vec<f64>> = if sample_points.is_empty() {
        let mut rng = seeded_rng(derive_seed(seed, "injectivity samples"));
        (0..50)
            .map(|_| (0..latent_dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
            .collect()
    } else {
        sample_points.to_vec()
    };

    let non_expanding_layers: Vec<usize> = net
        .layers()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind.output_dim() < l.kind.input_dim())
        .map(|(i, _)| i)
        .collect();
    let expanding_precondition = non_expanding_layers.is_empty();

    let mut min_rank = usize::MAX;
    let mut deficient = Vec::new();
    let mut stable = true;
    let mut outputs = Vec::with_capacity(samples.len());
    for (idx, x) in samples.iter().enumerate() {
        let jac = net.jacobian(x)?;
        let report = numeric_rank(&jac.view(), None);
        if !rank_is_stable(&jac.view()) {
            stable = false;
        }
        min_rank = min_rank.min(report.numeric_rank);
        if report.numeric_rank < latent_dim {
            deficient.push(idx);
        }
        outputs.push(net.forward(x)?);
    }

    let mut min_sep = f64::INFINITY;
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let d2: f64 = outputs[i]
                .iter()
                .zip(&outputs[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            min_sep = min_sep.min(d2.sqrt());
        }
    }
    if outputs.len() < 2 {
        min_sep = f64::INFINITY;
    }
    let distinct = min_sep > 0.0;

    Ok(InjectivityReport {
        latent_dim,
        sample_count: samples.len(),
        expanding_precondition,
        non_expanding_layers,
        min_rank,
        deficient_samples: deficient.clone(),
        rank_stable: stable,
        outputs_pairwise_distinct: distinct,
        min_output_separation: min_sep,
        embedding_evidence: expanding_precondition && deficient.is_empty() && distinct,
    })
}
