//! Cycle experiments: near-full-measure chart subsets of two manifolds of
//! equal dimension, an explicit diffeomorphism between them, trained
//! forward/backward network pairs, and the composition-error certificate.
//!
//! The kept region of a subset is a closed box in chart coordinates,
//! centered in the chart domain and scaled by a radius parameter, so it is
//! diffeomorphic to a closed ball and stays clear of the chart's cut locus
//! and singular bands. Everything downstream (the ground-truth maps, the
//! training data, the evaluation clouds) lives on these kept regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::latent_points;
use crate::hausdorff::{hausdorff, net_fineness, PointCloud};
use crate::linalg::operator_norm;
use crate::manifold::{AmbientPoint, BoxRegion, ChartPoint, EmbeddedManifold, Interval};
use crate::neural::{
    train_regression, Activation, LayerKind, Network, TrainConfig, TrainReport,
};
use crate::rng::derive_seed;

/// Fraction of the deficit budget the bisection aims for; the slack absorbs
/// quadrature error so the built subset stays strictly under budget.
const DEFICIT_TARGET_FRACTION: f64 = 0.7;
const BISECTION_STEPS: usize = 48;

/// A chart box kept after excising the region around the cut locus, with
/// its measured volume deficit.
#[derive(Debug, Clone)]
pub struct ChartSubset {
    manifold: EmbeddedManifold,
    radius_param: f64,
    kept: BoxRegion,
    measure_deficit: f64,
    total_volume: f64,
    quadrature_resolution: usize,
}

fn kept_box(domain: &BoxRegion, r: f64) -> BoxRegion {
    BoxRegion::new(
        domain
            .intervals
            .iter()
            .map(|iv| {
                let mid = iv.midpoint();
                let half = 0.5 * iv.length() * r;
                Interval::new(mid - half, mid + half)
            })
            .collect(),
    )
}

/// Builds the kept subset for a deficit budget `delta` (in absolute
/// Riemannian volume). The shrink factor is found by bisection against
/// midpoint quadrature, then the deficit is re-measured at twice the
/// resolution; disagreement beyond 1% means `delta` is below what the
/// quadrature can resolve.
pub fn build_chart_subset(manifold: &EmbeddedManifold, delta: f64) -> Result<ChartSubset> {
    let d = manifold.intrinsic_dim();
    let resolution = if d == 1 { 4096 } else { 512 };
    let domain = manifold.chart_domain().clone();
    let total = manifold.volume(&domain, resolution)?;
    if !(delta > 0.0 && delta < total) {
        return Err(Error::InvalidArgument(format!(
            "deficit budget must lie in (0, {total:.6}), got {delta}"
        )));
    }

    let kept_at = |r: f64, res: usize| -> Result<f64> {
        manifold.volume(&kept_box(&domain, r), res)
    };

    // The bisection only needs the deficit's trend, so it runs on a coarse
    // grid; the budget is certified afterwards at full and double
    // resolution.
    let bisect_res = if d == 1 { resolution } else { 128 };
    let total_coarse = manifold.volume(&domain, bisect_res)?;
    let target = DEFICIT_TARGET_FRACTION * delta;
    let mut lo = 1e-6;
    let mut hi = 1.0 - 1e-9;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if total_coarse - kept_at(mid, bisect_res)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let deficit = total - kept_at(r, resolution)?;
    let total_fine = manifold.volume(&domain, resolution * 2)?;
    let deficit_fine = total_fine - kept_at(r, resolution * 2)?;
    let spread = (deficit - deficit_fine).abs();
    if deficit <= 0.0
        || deficit_fine <= 0.0
        || spread > 0.01 * deficit.max(deficit_fine)
        || deficit >= delta
        || deficit_fine >= delta
    {
        return Err(Error::BelowResolution {
            context: "chart subset deficit quadrature",
            requested: delta,
            resolution: spread.max(f64::EPSILON * total),
        });
    }
    Ok(ChartSubset {
        manifold: manifold.clone(),
        radius_param: r,
        kept: kept_box(&domain, r),
        measure_deficit: deficit_fine,
        total_volume: total,
        quadrature_resolution: resolution,
    })
}

impl ChartSubset {
    pub fn manifold(&self) -> &EmbeddedManifold {
        &self.manifold
    }

    pub fn radius_param(&self) -> f64 {
        self.radius_param
    }

    /// The kept closed box in chart coordinates; the excluded region is its
    /// complement within the chart domain.
    pub fn kept_region(&self) -> &BoxRegion {
        &self.kept
    }

    pub fn measure_deficit(&self) -> f64 {
        self.measure_deficit
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    /// Re-measures the deficit at an arbitrary quadrature resolution.
    pub fn deficit_at_resolution(&self, resolution: usize) -> Result<f64> {
        let total = self.manifold.volume(self.manifold.chart_domain(), resolution)?;
        let kept = self.manifold.volume(&self.kept, resolution)?;
        Ok(total - kept)
    }

    pub fn quadrature_resolution(&self) -> usize {
        self.quadrature_resolution
    }

    /// Affine map from the kept box onto the normalized cube [−1, 1]^d.
    pub fn normalize(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        if p.coords.len() != self.kept.dim() {
            return Err(Error::Shape(format!(
                "chart point has dimension {}, subset has {}",
                p.coords.len(),
                self.kept.dim()
            )));
        }
        Ok(self
            .kept
            .intervals
            .iter()
            .zip(&p.coords)
            .map(|(iv, &x)| (x - iv.midpoint()) / (0.5 * iv.length()))
            .collect())
    }

    /// Inverse of [`normalize`](Self::normalize); defined for any finite
    /// input by affine extension.
    pub fn denormalize(&self, z: &[f64]) -> Result<ChartPoint> {
        if z.len() != self.kept.dim() {
            return Err(Error::Shape(format!(
                "normalized point has dimension {}, subset has {}",
                z.len(),
                self.kept.dim()
            )));
        }
        Ok(ChartPoint::new(
            self.kept
                .intervals
                .iter()
                .zip(z)
                .map(|(iv, &v)| iv.midpoint() + 0.5 * iv.length() * v)
                .collect(),
        ))
    }

    /// Area-uniform points of the kept region: the manifold's area-uniform
    /// stream restricted to the kept box by rejection.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<ChartPoint>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let accept = ((self.total_volume - self.measure_deficit) / self.total_volume).max(1e-3);
        let mut out = Vec::with_capacity(count);
        for round in 0..64u64 {
            let missing = count - out.len();
            let draw = ((missing as f64 / accept) * 1.3).ceil() as usize + 32;
            let stage = format!("subset sample round {round}");
            let batch = self
                .manifold
                .sample_area_uniform(draw, derive_seed(seed, &stage));
            out.extend(
                batch
                    .into_iter()
                    .filter(|p| self.kept.contains(&p.coords, 0.0)),
            );
            if out.len() >= count {
                out.truncate(count);
                return Ok(out);
            }
        }
        Err(Error::ResourceLimit(format!(
            "rejection sampling stalled: {} of {count} points after 64 rounds",
            out.len()
        )))
    }

    /// Deterministic tensor grid over the kept box (`resolution` points per
    /// axis for 1- and 2-dimensional charts).
    pub fn chart_grid(&self, resolution: usize) -> Result<Vec<ChartPoint>> {
        let d = self.kept.dim();
        let latents = latent_points(d, resolution, 0)?;
        latents.iter().map(|z| self.denormalize(z)).collect()
    }

    /// Embeds chart points, assuming they came from this subset.
    pub fn embed_all(&self, points: &[ChartPoint]) -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|p| self.manifold.embed_unchecked(&p.coords))
            .collect()
    }
}

/// The explicit diffeomorphism between two kept subsets: chart inverse,
/// normalization to the cube, denormalization into the other chart,
/// embedding. Its inverse is the mirror composition.
#[derive(Debug, Clone)]
pub struct GroundTruthDiffeo {
    src: ChartSubset,
    dst: ChartSubset,
}

pub fn ground_truth_diffeo(src: &ChartSubset, dst: &ChartSubset) -> Result<GroundTruthDiffeo> {
    if src.manifold.intrinsic_dim() != dst.manifold.intrinsic_dim() {
        return Err(Error::InvalidArgument(format!(
            "diffeomorphism needs equal intrinsic dimensions, got {} and {}",
            src.manifold.intrinsic_dim(),
            dst.manifold.intrinsic_dim()
        )));
    }
    Ok(GroundTruthDiffeo {
        src: src.clone(),
        dst: dst.clone(),
    })
}

impl GroundTruthDiffeo {
    pub fn source(&self) -> &ChartSubset {
        &self.src
    }

    pub fn target(&self) -> &ChartSubset {
        &self.dst
    }

    /// Forward map on an ambient point of the source manifold.
    pub fn forward(&self, ambient: &[f64]) -> Result<Vec<f64>> {
        let p = self
            .src
            .manifold
            .chart_inverse(&AmbientPoint::new(ambient.to_vec()))?;
        self.forward_from_chart(&p)
    }

    /// Forward map when the source chart coordinates are already known,
    /// skipping the chart inversion.
    pub fn forward_from_chart(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        let z = self.src.normalize(p)?;
        let q = self.dst.denormalize(&z)?;
        Ok(self.dst.manifold.embed_unchecked(&q.coords))
    }

    pub fn backward(&self, ambient: &[f64]) -> Result<Vec<f64>> {
        let p = self
            .dst
            .manifold
            .chart_inverse(&AmbientPoint::new(ambient.to_vec()))?;
        self.backward_from_chart(&p)
    }

    pub fn backward_from_chart(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        let z = self.dst.normalize(p)?;
        let q = self.src.denormalize(&z)?;
        Ok(self.src.manifold.embed_unchecked(&q.coords))
    }
}

/// Architecture and training budget for one cycle pair. The same stack
/// shape is used for both directions: dense layers through `hidden` with
/// the given activation, then a linear output layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleTrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub train_samples: usize,
    /// Held-out grid resolution used to measure the supervised fit error.
    pub holdout_resolution: usize,
    pub train: TrainConfig,
}

/// A trained forward/backward pair with its recorded fit errors.
#[derive(Debug, Clone)]
pub struct CyclePair {
    pub forward_net: Network,
    pub backward_net: Network,
    pub source: ChartSubset,
    pub target: ChartSubset,
    /// Max held-out pointwise error of the forward fit.
    pub fit_forward: f64,
    pub fit_backward: f64,
    pub train_forward: Option<TrainReport>,
    pub train_backward: Option<TrainReport>,
}

impl CyclePair {
    /// The empirical ε: the larger of the two supervised fit errors.
    pub fn fit_eps(&self) -> f64 {
        self.fit_forward.max(self.fit_backward)
    }
}

fn dense_stack(input: usize, hidden: &[usize], output: usize, act: Activation) -> Vec<(LayerKind, Activation)> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut cur = input;
    for &h in hidden {
        specs.push((LayerKind::Dense { input: cur, output: h }, act));
        cur = h;
    }
    specs.push((LayerKind::Dense { input: cur, output }, Activation::Identity));
    specs
}

/// Max pointwise Euclidean error of `net` against `truth` on a held-out
/// grid of the subset.
pub fn holdout_fit<F>(net: &Network, subset: &ChartSubset, resolution: usize, truth: F) -> Result<f64>
where
    F: Fn(&ChartPoint) -> Result<Vec<f64>>,
{
    let grid = subset.chart_grid(resolution)?;
    let mut worst = 0.0_f64;
    for p in &grid {
        let x = subset.manifold.embed_unchecked(&p.coords);
        let got = net.forward(&x)?;
        let want = truth(p)?;
        let err: f64 = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Trains the two networks against the ground-truth diffeomorphism on
/// area-uniform samples of the kept subsets. A zero-epoch budget skips the
/// optimizer and reports the fit of the freshly initialized networks.
pub fn train_cycle(
    src: &ChartSubset,
    dst: &ChartSubset,
    config: &CycleTrainConfig,
) -> Result<CyclePair> {
    let diffeo = ground_truth_diffeo(src, dst)?;
    let seed = config.train.seed;

    let mut forward_net = Network::new(
        &dense_stack(
            src.manifold.ambient_dim(),
            &config.hidden,
            dst.manifold.ambient_dim(),
            config.activation,
        ),
        derive_seed(seed, "cycle forward net"),
    )?;
    let mut backward_net = Network::new(
        &dense_stack(
            dst.manifold.ambient_dim(),
            &config.hidden,
            src.manifold.ambient_dim(),
            config.activation,
        ),
        derive_seed(seed, "cycle backward net"),
    )?;

    let mut train_forward = None;
    let mut train_backward = None;
    if config.train.epochs > 0 {
        let src_pts = src.sample(config.train_samples, derive_seed(seed, "cycle forward data"))?;
        let inputs = src.embed_all(&src_pts);
        let targets: Result<Vec<Vec<f64>>> =
            src_pts.iter().map(|p| diffeo.forward_from_chart(p)).collect();
        let mut cfg = config.train.clone();
        cfg.seed = derive_seed(seed, "cycle forward training");
        train_forward = Some(train_regression(&mut forward_net, &inputs, &targets?, &cfg)?);

        let dst_pts = dst.sample(config.train_samples, derive_seed(seed, "cycle backward data"))?;
        let inputs = dst.embed_all(&dst_pts);
        let targets: Result<Vec<Vec<f64>>> =
            dst_pts.iter().map(|p| diffeo.backward_from_chart(p)).collect();
        let mut cfg = config.train.clone();
        cfg.seed = derive_seed(seed, "cycle backward training");
        train_backward = Some(train_regression(&mut backward_net, &inputs, &targets?, &cfg)?);
    }

    let fit_forward = holdout_fit(&forward_net, src, config.holdout_resolution, |p| {
        diffeo.forward_from_chart(p)
    })?;
    let fit_backward = holdout_fit(&backward_net, dst, config.holdout_resolution, |p| {
        diffeo.backward_from_chart(p)
    })?;

    Ok(CyclePair {
        forward_net,
        backward_net,
        source: src.clone(),
        target: dst.clone(),
        fit_forward,
        fit_backward,
        train_forward,
        train_backward,
    })
}

/// The certificate produced by one evaluation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleReport {
    pub hausdorff_forward: f64,
    pub hausdorff_backward: f64,
    /// max over source samples of ‖g(f(x)) − x‖.
    pub composition_error_fwd: f64,
    pub composition_error_bwd: f64,
    pub fit_eps: f64,
    /// Max sampled operator norm of the backward net's Jacobian; a sampled
    /// estimate of the Lipschitz constant, not a global bound.
    pub lipschitz_g: f64,
    pub lipschitz_f: f64,
    pub bound_fwd: f64,
    pub bound_bwd: f64,
    pub bound_ok: bool,
    pub source_fineness: f64,
    pub target_fineness: f64,
    pub sample_count: usize,
}

fn max_operator_norm(net: &Network, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for p in points {
        let jac = net.jacobian(p)?;
        worst = worst.max(operator_norm(&jac.view()));
    }
    Ok(worst)
}

/// Evaluates a trained pair on fresh area-uniform samples: Hausdorff
/// distances between mapped clouds, worst-case composition errors, sampled
/// Lipschitz constants, and the (1 + ‖Dg‖)·ε certificate.
pub fn evaluate_cycle(pair: &CyclePair, sample_count: usize, seed: u64) -> Result<CycleReport> {
    if sample_count < 2 {
        return Err(Error::InvalidArgument(
            "cycle evaluation needs at least 2 sample points".into(),
        ));
    }
    let src_pts = pair.source.sample(sample_count, derive_seed(seed, "cycle eval src"))?;
    let dst_pts = pair.target.sample(sample_count, derive_seed(seed, "cycle eval dst"))?;
    let xs = pair.source.embed_all(&src_pts);
    let ys = pair.target.embed_all(&dst_pts);

    let fx: Result<Vec<Vec<f64>>> = xs.iter().map(|x| pair.forward_net.forward(x)).collect();
    let fx = fx?;
    let gy: Result<Vec<Vec<f64>>> = ys.iter().map(|y| pair.backward_net.forward(y)).collect();
    let gy = gy?;

    let x_cloud = PointCloud::from_rows(&xs)?;
    let y_cloud = PointCloud::from_rows(&ys)?;
    let fx_cloud = PointCloud::from_rows(&fx)?;
    let gy_cloud = PointCloud::from_rows(&gy)?;

    let hausdorff_forward = hausdorff(&fx_cloud, &y_cloud)?;
    let hausdorff_backward = hausdorff(&gy_cloud, &x_cloud)?;

    let mut composition_error_fwd = 0.0_f64;
    for (x, fxv) in xs.iter().zip(&fx) {
        let back = pair.backward_net.forward(fxv)?;
        let err: f64 = back
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        composition_error_fwd = composition_error_fwd.max(err);
    }
    let mut composition_error_bwd = 0.0_f64;
    for (y, gyv) in ys.iter().zip(&gy) {
        let fwd = pair.forward_net.forward(gyv)?;
        let err: f64 = fwd
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        composition_error_bwd = composition_error_bwd.max(err);
    }

    // The composition argument walks g along the segment between the true
    // image f(x) and the network image, so the norm of Dg is sampled on
    // both clouds near that segment; mirror for f.
    let mut g_points = ys.clone();
    g_points.extend(fx.iter().cloned());
    let lipschitz_g = max_operator_norm(&pair.backward_net, &g_points)?;
    let mut f_points = xs.clone();
    f_points.extend(gy.iter().cloned());
    let lipschitz_f = max_operator_norm(&pair.forward_net, &f_points)?;

    let fit_eps = pair.fit_eps();
    let bound_fwd = (1.0 + lipschitz_g) * fit_eps;
    let bound_bwd = (1.0 + lipschitz_f) * fit_eps;
    let bound_ok = composition_error_fwd <= bound_fwd && composition_error_bwd <= bound_bwd;

    Ok(CycleReport {
        hausdorff_forward,
        hausdorff_backward,
        composition_error_fwd,
        composition_error_bwd,
        fit_eps,
        lipschitz_g,
        lipschitz_f,
        bound_fwd,
        bound_bwd,
        bound_ok,
        source_fineness: net_fineness(&x_cloud)?,
        target_fineness: net_fineness(&y_cloud)?,
        sample_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Layer, Optimizer};
    use std::f64::consts::TAU;

    fn circle_subset(radius: f64, delta_fraction: f64) -> ChartSubset {
        let m = EmbeddedManifold::circle_with(radius, [0.0, 0.0]);
        let total = radius * TAU;
        build_chart_subset(&m, delta_fraction * total).unwrap()
    }

    #[test]
    fn circle_subset_hits_deficit_budget() {
        let delta = 0.1 * TAU;
        let s = circle_subset(1.0, 0.1);
        assert!(s.measure_deficit() > 0.0 && s.measure_deficit() < delta);
        // Kept arc length is r·2π and must stay at or above 90% of the
        // circle once the deficit is under 0.1·2π.
        let kept_len: f64 = s.kept_region().intervals[0].length();
        assert!(kept_len >= 0.9 * TAU, "kept {kept_len}");
        let recheck = s.deficit_at_resolution(2 * s.quadrature_resolution()).unwrap();
        assert!((recheck - s.measure_deficit()).abs() <= 0.01 * recheck.max(s.measure_deficit()));
    }

    #[test]
    fn near_total_deficit_budget_is_still_feasible() {
        let s = circle_subset(1.0, 0.95);
        assert!(s.measure_deficit() < 0.95 * TAU);
        assert!(s.radius_param() < 0.5);
        assert!(s.kept_region().intervals[0].length() > 0.0);
    }

    #[test]
    fn sphere_subset_deficit_verified_by_quadrature() {
        let m = EmbeddedManifold::sphere();
        let total = m.volume(m.chart_domain(), 512).unwrap();
        let delta = 0.05 * total;
        let s = build_chart_subset(&m, delta).unwrap();
        assert!(s.measure_deficit() < delta);
        let recheck = s.deficit_at_resolution(1024).unwrap();
        assert!((recheck - s.measure_deficit()).abs() <= 0.01 * recheck.max(s.measure_deficit()));
    }

    #[test]
    fn out_of_range_deficit_budgets_are_rejected() {
        let m = EmbeddedManifold::circle();
        assert!(build_chart_subset(&m, 0.0).is_err());
        assert!(build_chart_subset(&m, -1.0).is_err());
        assert!(build_chart_subset(&m, TAU + 1.0).is_err());
        // A budget below the quadrature's resolving power must be refused,
        // not silently accepted.
        let sphere = EmbeddedManifold::sphere();
        let err = build_chart_subset(&sphere, 1e-10).unwrap_err();
        assert!(matches!(err, Error::BelowResolution { .. }), "got {err}");
    }

    #[test]
    fn normalization_round_trips_and_covers_cube() {
        let s = circle_subset(1.0, 0.2);
        for z in [-1.0, -0.25, 0.0, 0.5, 1.0] {
            let p = s.denormalize(&[z]).unwrap();
            assert!(s.kept_region().contains(&p.coords, 1e-12));
            let back = s.normalize(&p).unwrap();
            assert!((back[0] - z).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_land_inside_the_kept_box() {
        let m = EmbeddedManifold::sphere();
        let total = m.volume(m.chart_domain(), 512).unwrap();
        let s = build_chart_subset(&m, 0.2 * total).unwrap();
        let pts = s.sample(300, 9).unwrap();
        assert_eq!(pts.len(), 300);
        for p in &pts {
            assert!(s.kept_region().contains(&p.coords, 0.0));
        }
    }

    #[test]
    fn identity_pair_round_trips_exactly() {
        let s = circle_subset(1.0, 0.1);
        let d = ground_truth_diffeo(&s, &s).unwrap();
        let pts = s.sample(200, 4).unwrap();
        for p in &pts {
            let x = s.manifold().embed_unchecked(&p.coords);
            let fx = d.forward(&x).unwrap();
            let err: f64 = fx.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "identity diffeo moved a point by {err}");
        }
    }

    #[test]
    fn circle_doubling_diffeo_scales_coordinates() {
        // Matched relative budgets give both subsets the same shrink
        // factor, so the angle map has slope one and the ambient map is
        // multiplication by two.
        let src = circle_subset(1.0, 0.1);
        let dst = circle_subset(2.0, 0.1);
        let d = ground_truth_diffeo(&src, &dst).unwrap();
        let pts = src.sample(200, 5).unwrap();
        for p in &pts {
            let x = src.manifold().embed_unchecked(&p.coords);
            let fx = d.forward(&x).unwrap();
            for (a, b) in fx.iter().zip(&x) {
                assert!((a - 2.0 * b).abs() < 1e-9, "{a} vs 2·{b}");
            }
            let back = d.backward(&fx).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sphere_round_trip_on_thousand_samples() {
        let m = EmbeddedManifold::sphere();
        let total = m.volume(m.chart_domain(), 512).unwrap();
        let src = build_chart_subset(&m, 0.05 * total).unwrap();
        let dst = build_chart_subset(&m, 0.12 * total).unwrap();
        let d = ground_truth_diffeo(&src, &dst).unwrap();
        let pts = src.sample(1000, 6).unwrap();
        let mut worst = 0.0_f64;
        for p in &pts {
            let x = src.manifold().embed_unchecked(&p.coords);
            let fx = d.forward(&x).unwrap();
            let back = d.backward(&fx).unwrap();
            let err: f64 = back
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err);
        }
        assert!(worst < 1e-10, "round trip error {worst}");
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let c = circle_subset(1.0, 0.1);
        let m = EmbeddedManifold::sphere();
        let total = m.volume(m.chart_domain(), 512).unwrap();
        let s = build_chart_subset(&m, 0.1 * total).unwrap();
        assert!(ground_truth_diffeo(&c, &s).is_err());
    }

    fn scaling_net(dim: usize, factor: f64) -> Network {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = factor;
        }
        let layer = Layer::new(
            LayerKind::Dense { input: dim, output: dim },
            Activation::Identity,
            w,
            vec![0.0; dim],
        )
        .unwrap();
        Network::from_layers(vec![layer], 0).unwrap()
    }

    #[test]
    fn exact_linear_pair_satisfies_every_bound() {
        let src = circle_subset(1.0, 0.1);
        let dst = circle_subset(2.0, 0.1);
        let diffeo = ground_truth_diffeo(&src, &dst).unwrap();
        let forward_net = scaling_net(2, 2.0);
        let backward_net = scaling_net(2, 0.5);
        let fit_forward = holdout_fit(&forward_net, &src, 512, |p| {
            diffeo.forward_from_chart(p)
        })
        .unwrap();
        let fit_backward = holdout_fit(&backward_net, &dst, 512, |p| {
            diffeo.backward_from_chart(p)
        })
        .unwrap();
        assert!(fit_forward < 1e-9, "linear net should match the scaling map");
        let pair = CyclePair {
            forward_net,
            backward_net,
            source: src,
            target: dst,
            fit_forward,
            fit_backward,
            train_forward: None,
            train_backward: None,
        };
        let report = evaluate_cycle(&pair, 512, 11).unwrap();
        assert!(report.composition_error_fwd < 1e-9);
        assert!(report.composition_error_bwd < 1e-9);
        assert!((report.lipschitz_g - 0.5).abs() < 1e-9);
        assert!((report.lipschitz_f - 2.0).abs() < 1e-9);
        assert!(report.bound_ok);
        assert!(report.hausdorff_forward <= report.fit_eps + report.target_fineness);
        assert!(report.hausdorff_backward <= report.fit_eps + report.source_fineness);
    }

    #[test]
    fn identity_task_fits_quickly() {
        let s = circle_subset(1.0, 0.1);
        let config = CycleTrainConfig {
            hidden: vec![4],
            activation: Activation::Identity,
            train_samples: 256,
            holdout_resolution: 256,
            train: TrainConfig {
                learning_rate: 0.1,
                epochs: 600,
                batch_size: 256,
                seed: 21,
                optimizer: Optimizer::Momentum { beta: 0.9 },
                target_loss: 0.0,
            },
        };
        let pair = train_cycle(&s, &s, &config).unwrap();
        assert!(pair.fit_eps() < 1e-3, "identity fit stalled at {}", pair.fit_eps());
    }

    #[test]
    fn zero_epoch_budget_reports_initial_error() {
        let s = circle_subset(1.0, 0.1);
        let config = CycleTrainConfig {
            hidden: vec![8],
            activation: Activation::Tanh,
            train_samples: 64,
            holdout_resolution: 128,
            train: TrainConfig {
                learning_rate: 0.1,
                epochs: 0,
                batch_size: 32,
                seed: 3,
                optimizer: Optimizer::Gradient,
                target_loss: 0.0,
            },
        };
        let pair = train_cycle(&s, &s, &config).unwrap();
        assert!(pair.train_forward.is_none());
        assert!(pair.fit_eps() > 0.01, "untrained net should not fit");
        let report = evaluate_cycle(&pair, 128, 1).unwrap();
        assert!(report.fit_eps.is_finite());
        assert!(report.lipschitz_f.is_finite());
    }

    #[test]
    fn trained_doubling_pair_certifies_the_bound() {
        let src = circle_subset(1.0, 0.05);
        let dst = circle_subset(2.0, 0.05);
        let config = CycleTrainConfig {
            hidden: vec![32],
            activation: Activation::Tanh,
            train_samples: 512,
            holdout_resolution: 512,
            train: TrainConfig {
                learning_rate: 0.01,
                epochs: 1500,
                batch_size: 64,
                seed: 7,
                optimizer: Optimizer::Adaptive { beta: 0.95, epsilon: 1e-8 },
                target_loss: 1e-7,
            },
        };
        let pair = train_cycle(&src, &dst, &config).unwrap();
        assert!(pair.fit_eps() < 0.05, "fit_eps {}", pair.fit_eps());
        let report = evaluate_cycle(&pair, 512, 13).unwrap();
        assert!(report.bound_ok, "composition bound failed: {report:?}");
        assert!(
            (report.lipschitz_g - 0.5).abs() <= 0.1 + report.fit_eps,
            "lipschitz_g {}",
            report.lipschitz_g
        );
        assert!(report.hausdorff_forward <= report.fit_eps + report.target_fineness);
    }
}
