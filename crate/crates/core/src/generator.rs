//! Surjective generators from the latent cube onto embedded manifolds.
//!
//! A generator composes three pieces: a diameter bound R₀ for the target
//! manifold, a g-orthonormal frame at a base point, and the exponential map.
//! The map sends the cube [−1,1]^d through z ↦ exp_q(R₀·F·z); because every
//! tangent vector of g-norm ≤ R₀ has frame coordinates inside the cube, the
//! image covers the whole manifold once R₀ dominates the Riemannian
//! diameter.
//!
//! The multiclass construction slices the first cube axis into per-class
//! slabs separated by gaps of half-width h = δ/(2(c−1)) and linearly
//! interpolates neighboring class maps across each gap, producing one
//! continuous map whose restriction to slab i is a renormalized copy of
//! class i's generator.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geodesic::exp_map;
use crate::hausdorff::{hausdorff, PointCloud};
use crate::linalg::gram_schmidt_with_inner;
use crate::manifold::{AmbientPoint, BoxRegion, ChartPoint, EmbeddedManifold, Interval};
use crate::rng::{derive_seed, HaltonSequence};

/// Riemannian diameter bound produced by graph approximation.
#[derive(Debug, Clone)]
pub struct DiameterEstimate {
    /// The bound R₀, already inflated by `safety_factor`.
    pub value: f64,
    pub sample_count: usize,
    pub safety_factor: f64,
}

const DIAMETER_SAFETY_FACTOR: f64 = 1.2;
const DIAMETER_SOURCE_COUNT: usize = 16;

/// Total order on finite edge weights for the shortest-path heap.
#[derive(PartialEq)]
struct HeapDist(f64);

impl Eq for HeapDist {}

impl PartialOrd for HeapDist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapDist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s.sqrt()
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((HeapDist(0.0), source)));
    while let Some(Reverse((HeapDist(d), node))) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in &adjacency[node] {
            let cand = d + w;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(Reverse((HeapDist(cand), next)));
            }
        }
    }
    dist
}

fn component_count(adjacency: &[Vec<(usize, f64)>]) -> usize {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(node) = stack.pop() {
            for &(next, _) in &adjacency[node] {
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
    }
    components
}

/// Bounds the Riemannian diameter of a built-in manifold.
///
/// Draws an area-uniform i.i.d. sample, builds the symmetrized k-nearest-
/// neighbor graph with Euclidean edge weights, runs shortest paths from 16
/// farthest-point-separated sources, and inflates the largest distance seen
/// (graph or direct chord) by 1.2. Overestimation is safe: the exponential
/// map is defined on all of T_qM, so a generous R₀ only wastes latent
/// volume.
pub fn estimate_diameter(
    manifold: &EmbeddedManifold,
    sample_count: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<DiameterEstimate> {
    if k_neighbors == 0 {
        return Err(Error::InvalidArgument("k_neighbors must be positive".into()));
    }
    if sample_count < 10 * k_neighbors {
        return Err(Error::InvalidArgument(format!(
            "sample_count {sample_count} below 10·k_neighbors = {}",
            10 * k_neighbors
        )));
    }
    let chart_points = manifold.sample_area_uniform_iid(sample_count, seed);
    let points: Vec<Vec<f64>> = chart_points
        .iter()
        .map(|p| manifold.embed(p).map(|a| a.coords))
        .collect::<Result<_>>()?;
    let n = points.len();

    // Symmetrized k-NN adjacency.
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        let key = |j: usize| euclidean(&points[i], &points[j]);
        let k = k_neighbors.min(order.len());
        order.select_nth_unstable_by(k - 1, |&a, &b| key(a).total_cmp(&key(b)));
        for &j in &order[..k] {
            let w = euclidean(&points[i], &points[j]);
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
    }

    // Farthest-point source selection in the embedding.
    let mut sources = vec![0usize];
    let mut min_dist: Vec<f64> = (0..n).map(|j| euclidean(&points[0], &points[j])).collect();
    while sources.len() < DIAMETER_SOURCE_COUNT.min(n) {
        let far = (0..n)
            .max_by(|&a, &b| min_dist[a].total_cmp(&min_dist[b]))
            .expect("nonempty sample");
        sources.push(far);
        for j in 0..n {
            min_dist[j] = min_dist[j].min(euclidean(&points[far], &points[j]));
        }
    }

    let mut graph_max = 0.0f64;
    for &s in &sources {
        let dist = dijkstra(&adjacency, s);
        for &d in &dist {
            if d.is_infinite() {
                return Err(Error::DisconnectedGraph {
                    k: k_neighbors,
                    components: component_count(&adjacency),
                });
            }
            graph_max = graph_max.max(d);
        }
    }

    // Exact chordal diameter of the sample: the bound must never fall below
    // any straight-line separation actually observed.
    let mut chord_max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            chord_max = chord_max.max(euclidean(&points[i], &points[j]));
        }
    }

    Ok(DiameterEstimate {
        value: DIAMETER_SAFETY_FACTOR * graph_max.max(chord_max),
        sample_count,
        safety_factor: DIAMETER_SAFETY_FACTOR,
    })
}

/// The cube-to-manifold map z ↦ exp_q(R₀·F·z).
#[derive(Debug, Clone)]
pub struct GeneratorMap {
    manifold: EmbeddedManifold,
    base_point: ChartPoint,
    radius: f64,
    /// Row a is the a-th g(q)-orthonormal tangent basis vector in chart
    /// coordinates.
    frame: Vec<Vec<f64>>,
}

const FRAME_ORTHONORMALITY_TOL: f64 = 1e-10;

/// Builds the generator at base point `q` with latent radius `r0`.
///
/// The frame comes from Gram–Schmidt on the coordinate basis under the
/// g(q) inner product, so cube coordinates measure g-length directly.
pub fn build_generator(
    manifold: &EmbeddedManifold,
    q: &ChartPoint,
    r0: f64,
) -> Result<GeneratorMap> {
    if r0 < 0.0 || !r0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "latent radius must be finite and nonnegative, got {r0}"
        )));
    }
    manifold.contains(q)?;
    let metric = manifold.metric(q)?;
    let d = manifold.intrinsic_dim();
    let basis: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|k| if a == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let frame = gram_schmidt_with_inner(
        &basis,
        |u, v| metric.inner(u, v),
        "generator frame at base point",
    )?;
    for a in 0..d {
        for b in a..d {
            let want = if a == b { 1.0 } else { 0.0 };
            let got = metric.inner(&frame[a], &frame[b]);
            if (got - want).abs() > FRAME_ORTHONORMALITY_TOL {
                return Err(Error::SingularMatrix {
                    context: "generator frame at base point",
                    pivot: got - want,
                    tolerance: FRAME_ORTHONORMALITY_TOL,
                });
            }
        }
    }
    Ok(GeneratorMap {
        manifold: manifold.clone(),
        base_point: q.clone(),
        radius: r0,
        frame,
    })
}

impl GeneratorMap {
    pub fn manifold(&self) -> &EmbeddedManifold {
        &self.manifold
    }

    pub fn base_point(&self) -> &ChartPoint {
        &self.base_point
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn latent_dim(&self) -> usize {
        self.manifold.intrinsic_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.manifold.ambient_dim()
    }

    /// Tangent vector R₀·F·z at the base point, in chart coordinates.
    pub fn tangent_of(&self, z: &[f64]) -> Result<Vec<f64>> {
        let d = self.latent_dim();
        if z.len() != d {
            return Err(Error::Shape(format!(
                "latent point has {} coordinates, expected {d}",
                z.len()
            )));
        }
        let mut v = vec![0.0; d];
        for a in 0..d {
            for k in 0..d {
                v[k] += self.radius * z[a] * self.frame[a][k];
            }
        }
        Ok(v)
    }

    /// Frame coordinates of a tangent vector, divided by R₀. Inverse of
    /// [`Self::tangent_of`] thanks to orthonormality.
    pub fn latent_of_tangent(&self, v: &[f64]) -> Result<Vec<f64>> {
        let d = self.latent_dim();
        if v.len() != d {
            return Err(Error::Shape(format!(
                "tangent vector has {} coordinates, expected {d}",
                v.len()
            )));
        }
        if self.radius == 0.0 {
            return Err(Error::InvalidArgument(
                "latent coordinates undefined for radius 0".into(),
            ));
        }
        let metric = self.manifold.metric(&self.base_point)?;
        Ok((0..d)
            .map(|a| metric.inner(v, &self.frame[a]) / self.radius)
            .collect())
    }

    /// Evaluates the generator at a latent point.
    pub fn map(&self, z: &[f64]) -> Result<AmbientPoint> {
        let v = self.tangent_of(z)?;
        exp_map(&self.manifold, &self.base_point, &v)
    }

    pub fn map_cloud(&self, latent: &[Vec<f64>]) -> Result<PointCloud> {
        let mut rows = Vec::with_capacity(latent.len());
        for z in latent {
            rows.push(self.map(z)?.coords);
        }
        PointCloud::from_rows(&rows)
    }
}

const MAX_LATENT_POINTS: usize = 1_000_000;

/// Deterministic latent evaluation set: a tensor grid for d ≤ 2, shifted
/// low-discrepancy points for d ≥ 3 (grids explode combinatorially there).
/// `resolution` is the per-axis count in every case.
pub fn latent_points(d: usize, resolution: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 || resolution == 0 {
        return Err(Error::InvalidArgument(
            "latent dimension and resolution must be positive".into(),
        ));
    }
    let total = resolution
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_LATENT_POINTS)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "latent point count {resolution}^{d} exceeds {MAX_LATENT_POINTS}"
            ))
        })?;
    let axis = |i: usize| -> f64 {
        if resolution == 1 {
            0.0
        } else {
            -1.0 + 2.0 * i as f64 / (resolution - 1) as f64
        }
    };
    match d {
        1 => Ok((0..resolution).map(|i| vec![axis(i)]).collect()),
        2 => {
            let mut out = Vec::with_capacity(total);
            for i in 0..resolution {
                for j in 0..resolution {
                    out.push(vec![axis(i), axis(j)]);
                }
            }
            Ok(out)
        }
        _ => {
            let mut seq = HaltonSequence::new(d, derive_seed(seed, "latent low-discrepancy"));
            Ok(seq
                .take_points(total)
                .into_iter()
                .map(|u| u.into_iter().map(|x| 2.0 * x - 1.0).collect())
                .collect())
        }
    }
}

/// Image cloud, manifold reference cloud, and their Hausdorff distance.
#[derive(Debug, Clone)]
pub struct SurjectivityReport {
    pub distance: f64,
    pub image: PointCloud,
    pub manifold_sample: PointCloud,
}

/// Measures how completely the generator image covers the manifold, as the
/// Hausdorff distance between the mapped latent set and an area-uniform
/// manifold sample.
pub fn surjectivity_report(
    generator: &GeneratorMap,
    grid_resolution: usize,
    manifold_sample_count: usize,
    seed: u64,
) -> Result<SurjectivityReport> {
    if grid_resolution == 0 || manifold_sample_count == 0 {
        return Err(Error::InvalidArgument(
            "grid resolution and sample count must be positive".into(),
        ));
    }
    let latent = latent_points(
        generator.latent_dim(),
        grid_resolution,
        derive_seed(seed, "surjectivity latent"),
    )?;
    let image = generator.map_cloud(&latent)?.with_label("generator image");
    let chart_sample = generator
        .manifold()
        .sample_area_uniform(manifold_sample_count, derive_seed(seed, "surjectivity sample"));
    let ambient = generator.manifold().embed_all(&chart_sample)?;
    let manifold_sample = PointCloud::from_ambient(&ambient)?.with_label("manifold sample");
    let distance = hausdorff(&image, &manifold_sample)?;
    Ok(SurjectivityReport {
        distance,
        image,
        manifold_sample,
    })
}

/// Hausdorff distance between the generator image and a manifold sample.
pub fn verify_surjectivity(
    generator: &GeneratorMap,
    grid_resolution: usize,
    manifold_sample_count: usize,
    seed: u64,
) -> Result<f64> {
    Ok(surjectivity_report(generator, grid_resolution, manifold_sample_count, seed)?.distance)
}

/// Where a first-axis coordinate falls in a slab partition.
#[derive(Debug, Clone, PartialEq)]
pub enum SlabLocation {
    Slab(usize),
    /// Inside the gap between slab `left` and slab `left + 1`, at affine
    /// coordinate `t ∈ (0, 1)` across the gap.
    Gap { left: usize, t: f64 },
}

/// Per-class slabs on the first cube axis, separated by interpolation gaps.
#[derive(Debug, Clone)]
pub struct SlabPartition {
    class_count: usize,
    delta: f64,
    latent_dim: usize,
    gap_half_width: f64,
    /// Breakpoints x_0 = −1 < x_1 < … < x_c = 1 of the uniform split.
    breakpoints: Vec<f64>,
    slabs: Vec<BoxRegion>,
}

/// Splits the first axis of I_d into `c` uniform pieces and shrinks each by
/// the gap half-width h = δ/(2(c−1)) away from interior breakpoints.
pub fn build_multiclass_partition(c: usize, delta: f64, d: usize) -> Result<SlabPartition> {
    if c < 2 {
        return Err(Error::InvalidArgument(format!(
            "class count must be at least 2, got {c}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("latent dimension must be positive".into()));
    }
    let h = delta / (2.0 * (c as f64 - 1.0));
    let piece = 2.0 / c as f64;
    if h >= piece {
        return Err(Error::Infeasible(format!(
            "gap half-width {h} is at least the per-class interval length {piece}"
        )));
    }
    let breakpoints: Vec<f64> = (0..=c).map(|i| -1.0 + 2.0 * i as f64 / c as f64).collect();
    let mut slabs = Vec::with_capacity(c);
    for i in 0..c {
        let lo = if i == 0 { breakpoints[0] } else { breakpoints[i] + h };
        let hi = if i == c - 1 {
            breakpoints[c]
        } else {
            breakpoints[i + 1] - h
        };
        if !(hi > lo) {
            return Err(Error::Infeasible(format!(
                "slab {i} collapses: [{lo}, {hi}]"
            )));
        }
        let mut intervals = vec![Interval::new(lo, hi)];
        for _ in 1..d {
            intervals.push(Interval::new(-1.0, 1.0));
        }
        slabs.push(BoxRegion::new(intervals));
    }
    Ok(SlabPartition {
        class_count: c,
        delta,
        latent_dim: d,
        gap_half_width: h,
        breakpoints,
        slabs,
    })
}

impl SlabPartition {
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn gap_half_width(&self) -> f64 {
        self.gap_half_width
    }

    /// The c+1 equispaced cut points of the first axis, gaps excluded.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slabs(&self) -> &[BoxRegion] {
        &self.slabs
    }

    /// Normalized measure of the removed gap set, in closed form:
    /// (c−1) gaps of width 2h over a first axis of length 2.
    pub fn removed_measure(&self) -> f64 {
        (self.class_count as f64 - 1.0) * self.gap_half_width
    }

    /// Locates a first-axis coordinate. Slab boundaries belong to the slab,
    /// so gap t is strictly inside (0, 1).
    pub fn locate(&self, x: f64) -> Result<SlabLocation> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::OutsideDomain {
                axis: 0,
                value: x,
                lo: -1.0,
                hi: 1.0,
                periodic: false,
            });
        }
        for (i, slab) in self.slabs.iter().enumerate() {
            let iv = &slab.intervals[0];
            if x >= iv.lo && x <= iv.hi {
                return Ok(SlabLocation::Slab(i));
            }
        }
        for left in 0..self.class_count - 1 {
            let gap_lo = self.slabs[left].intervals[0].hi;
            let gap_hi = self.slabs[left + 1].intervals[0].lo;
            if x > gap_lo && x < gap_hi {
                return Ok(SlabLocation::Gap {
                    left,
                    t: (x - gap_lo) / (gap_hi - gap_lo),
                });
            }
        }
        unreachable!("slabs and gaps tile [-1, 1]");
    }

    /// Affine renormalization of slab i's first axis onto [−1, 1].
    fn renormalize_first_axis(&self, class: usize, x: f64) -> f64 {
        let iv = &self.slabs[class].intervals[0];
        2.0 * ((x - iv.lo) / (iv.hi - iv.lo)) - 1.0
    }
}

/// Continuous map gluing one generator per slab with linear gap tunnels.
#[derive(Debug, Clone)]
pub struct MulticlassGenerator {
    partition: SlabPartition,
    generators: Vec<GeneratorMap>,
}

/// Combines a partition with one generator per class.
pub fn build_multiclass_map(
    partition: SlabPartition,
    generators: Vec<GeneratorMap>,
) -> Result<MulticlassGenerator> {
    if generators.len() != partition.class_count() {
        return Err(Error::Shape(format!(
            "{} generators for {} classes",
            generators.len(),
            partition.class_count()
        )));
    }
    let ambient = generators[0].ambient_dim();
    for (i, g) in generators.iter().enumerate() {
        if g.ambient_dim() != ambient {
            return Err(Error::Shape(format!(
                "generator {i} has ambient dimension {}, expected {ambient}",
                g.ambient_dim()
            )));
        }
        if g.latent_dim() > partition.latent_dim() {
            return Err(Error::Shape(format!(
                "generator {i} has latent dimension {}, exceeding the partition's {}",
                g.latent_dim(),
                partition.latent_dim()
            )));
        }
    }
    Ok(MulticlassGenerator { partition, generators })
}

impl MulticlassGenerator {
    pub fn partition(&self) -> &SlabPartition {
        &self.partition
    }

    pub fn generators(&self) -> &[GeneratorMap] {
        &self.generators
    }

    pub fn ambient_dim(&self) -> usize {
        self.generators[0].ambient_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.partition.latent_dim()
    }

    fn class_value(&self, class: usize, z: &[f64]) -> Result<AmbientPoint> {
        let mut renorm = z.to_vec();
        renorm[0] = self.partition.renormalize_first_axis(class, z[0]);
        // A class manifold of lower dimension consumes the leading
        // coordinates; trailing cube axes are padding for it.
        renorm.truncate(self.generators[class].latent_dim());
        self.generators[class].map(&renorm)
    }

    /// Evaluates the glued map. On slab i this is generator i after first-
    /// axis renormalization; inside a gap it linearly interpolates the two
    /// neighbors evaluated on their facing slab faces, which makes the map
    /// agree exactly with the slab values at gap endpoints.
    pub fn map(&self, z: &[f64]) -> Result<AmbientPoint> {
        if z.len() != self.latent_dim() {
            return Err(Error::Shape(format!(
                "latent point has {} coordinates, expected {}",
                z.len(),
                self.latent_dim()
            )));
        }
        match self.partition.locate(z[0])? {
            SlabLocation::Slab(i) => self.class_value(i, z),
            SlabLocation::Gap { left, t } => {
                let mut face_right = z.to_vec();
                face_right[0] = self.partition.slabs()[left].intervals[0].hi;
                let mut face_left = z.to_vec();
                face_left[0] = self.partition.slabs()[left + 1].intervals[0].lo;
                let a = self.class_value(left, &face_right)?;
                let b = self.class_value(left + 1, &face_left)?;
                let coords = a
                    .coords
                    .iter()
                    .zip(&b.coords)
                    .map(|(&pa, &pb)| (1.0 - t) * pa + t * pb)
                    .collect();
                Ok(AmbientPoint::new(coords))
            }
        }
    }

    /// Uniform tensor grid over slab `class` (latent dimension ≤ 2).
    pub fn class_grid(&self, class: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
        if class >= self.partition.class_count() {
            return Err(Error::InvalidArgument(format!(
                "class {class} out of range for {} classes",
                self.partition.class_count()
            )));
        }
        let box_ = &self.partition.slabs()[class];
        let base = latent_points(self.latent_dim(), resolution, 0)?;
        Ok(base
            .into_iter()
            .map(|z| {
                z.iter()
                    .enumerate()
                    .map(|(a, &u)| {
                        let iv = &box_.intervals[a];
                        iv.lo + (u + 1.0) / 2.0 * (iv.hi - iv.lo)
                    })
                    .collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    #[test]
    fn circle_diameter_lands_in_safety_envelope() {
        let m = EmbeddedManifold::circle();
        // k must bridge the largest angular gap of the i.i.d. sample or the
        // k-NN cycle degenerates to a path and the estimate doubles.
        let est = estimate_diameter(&m, 1500, 16, 42).unwrap();
        assert!(
            est.value >= PI && est.value <= 1.2 * PI * 1.05,
            "circle R0 = {}",
            est.value
        );
        assert_eq!(est.safety_factor, 1.2);
    }

    #[test]
    fn sphere_diameter_near_pi() {
        let m = EmbeddedManifold::sphere();
        let est = estimate_diameter(&m, 900, 10, 7).unwrap();
        let raw = est.value / est.safety_factor;
        assert!(
            (0.9 * PI..=1.08 * PI).contains(&raw),
            "sphere graph diameter = {raw}"
        );
    }

    #[test]
    fn clifford_torus_diameter_matches_flat_formula() {
        let m = EmbeddedManifold::clifford_torus();
        let est = estimate_diameter(&m, 1200, 10, 3).unwrap();
        let truth = PI * 2.0f64.sqrt();
        let raw = est.value / est.safety_factor;
        assert!(
            (raw - truth).abs() <= 0.1 * truth,
            "flat torus diameter {raw} vs {truth}"
        );
    }

    #[test]
    fn diameter_dominates_chordal_spread() {
        let m = EmbeddedManifold::torus3();
        let est = estimate_diameter(&m, 400, 8, 11).unwrap();
        // Ambient chordal diameter of the doughnut is 2(R + r) = 5.
        assert!(est.value >= 4.5, "torus3 R0 = {}", est.value);
    }

    #[test]
    fn sparse_graph_reports_disconnection() {
        let m = EmbeddedManifold::circle();
        let err = estimate_diameter(&m, 20, 1, 5).unwrap_err();
        match err {
            Error::DisconnectedGraph { k, components } => {
                assert_eq!(k, 1);
                assert!(components >= 2);
            }
            other => panic!("expected disconnection, got {other}"),
        }
    }

    #[test]
    fn precondition_on_sample_count() {
        let m = EmbeddedManifold::circle();
        assert!(estimate_diameter(&m, 50, 8, 1).is_err());
    }

    #[test]
    fn circle_generator_hits_antipode() {
        let m = EmbeddedManifold::circle();
        let gen = build_generator(&m, &ChartPoint::new(vec![0.0]), PI).unwrap();
        let f1 = gen.map(&[1.0]).unwrap();
        assert!((f1.coords[0] + 1.0).abs() < 1e-9 && f1.coords[1].abs() < 1e-9);
        let f0 = gen.map(&[0.0]).unwrap();
        assert!((f0.coords[0] - 1.0).abs() < 1e-12 && f0.coords[1].abs() < 1e-12);
        let fm1 = gen.map(&[-1.0]).unwrap();
        assert!((fm1.coords[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn generator_at_zero_is_base_point() {
        for m in [
            EmbeddedManifold::sphere(),
            EmbeddedManifold::torus3(),
            EmbeddedManifold::clifford_torus(),
        ] {
            let q = ChartPoint::new(vec![1.0, 0.8]);
            let gen = build_generator(&m, &q, 2.5).unwrap();
            let f0 = gen.map(&[0.0, 0.0]).unwrap();
            let base = m.embed(&q).unwrap();
            assert!(f0.distance(&base) < 1e-12);
        }
    }

    #[test]
    fn frame_is_metric_orthonormal() {
        let m = EmbeddedManifold::torus3();
        let q = ChartPoint::new(vec![0.9, 2.0]);
        let gen = build_generator(&m, &q, 1.0).unwrap();
        let metric = m.metric(&q).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                let got = metric.inner(&gen.frame()[a], &gen.frame()[b]);
                assert!((got - want).abs() < 1e-10, "frame inner ({a},{b}) = {got}");
            }
        }
    }

    #[test]
    fn cube_contains_metric_ball() {
        // Every tangent vector of g-norm ≤ R0 must have cube coordinates.
        let m = EmbeddedManifold::torus3();
        let q = ChartPoint::new(vec![2.4, 5.1]);
        let r0 = 3.7;
        let gen = build_generator(&m, &q, r0).unwrap();
        let metric = m.metric(&q).unwrap();
        let mut rng = seeded_rng(99);
        for _ in 0..10_000 {
            let raw = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let norm = metric.norm(&raw);
            if norm == 0.0 {
                continue;
            }
            let v: Vec<f64> = raw.iter().map(|&x| x * r0 / norm).collect();
            let z = gen.latent_of_tangent(&v).unwrap();
            for &za in &z {
                assert!(za.abs() <= 1.0 + 1e-12, "ball direction escaped cube: {z:?}");
            }
            let back = gen.tangent_of(&z).unwrap();
            for k in 0..2 {
                assert!((back[k] - v[k]).abs() < 1e-9 * r0);
            }
        }
    }

    #[test]
    fn sphere_generator_covers_both_poles() {
        let m = EmbeddedManifold::sphere();
        let gen = build_generator(&m, &ChartPoint::new(vec![PI / 2.0, 0.0]), PI).unwrap();
        let grid = latent_points(2, 64, 0).unwrap();
        let cloud = gen.map_cloud(&grid).unwrap();
        let mut north = f64::INFINITY;
        let mut south = f64::INFINITY;
        for row in cloud.rows() {
            let dn = euclidean(row, &[0.0, 0.0, 1.0]);
            let ds = euclidean(row, &[0.0, 0.0, -1.0]);
            north = north.min(dn);
            south = south.min(ds);
        }
        assert!(north < 0.1 && south < 0.1, "poles missed: {north} / {south}");
    }

    #[test]
    fn circle_surjectivity_is_tight() {
        let m = EmbeddedManifold::circle();
        let gen = build_generator(&m, &ChartPoint::new(vec![0.0]), PI).unwrap();
        let d = verify_surjectivity(&gen, 2048, 2048, 0).unwrap();
        assert!(d < 0.01, "circle surjectivity distance {d}");
    }

    #[test]
    fn degenerate_radius_reports_ambient_diameter() {
        let m = EmbeddedManifold::circle();
        let gen = build_generator(&m, &ChartPoint::new(vec![0.0]), 0.0).unwrap();
        let d = verify_surjectivity(&gen, 64, 512, 0).unwrap();
        assert!((1.9..=2.01).contains(&d), "point image distance {d}");
    }

    #[test]
    fn surjectivity_improves_with_resolution() {
        let m = EmbeddedManifold::circle();
        let gen = build_generator(&m, &ChartPoint::new(vec![0.0]), PI).unwrap();
        let coarse = verify_surjectivity(&gen, 256, 1024, 4).unwrap();
        let fine = verify_surjectivity(&gen, 512, 1024, 4).unwrap();
        assert!(
            fine <= coarse * 1.2,
            "doubling resolution worsened coverage: {coarse} → {fine}"
        );
    }

    #[test]
    fn latent_points_shapes() {
        assert_eq!(latent_points(1, 5, 0).unwrap().len(), 5);
        assert_eq!(latent_points(2, 7, 0).unwrap().len(), 49);
        let pts = latent_points(3, 6, 0).unwrap();
        assert_eq!(pts.len(), 216);
        for p in &pts {
            assert!(p.iter().all(|&x| (-1.0..=1.0).contains(&x)));
        }
        assert!(latent_points(4, 100, 0).is_err());
        let line = latent_points(1, 3, 0).unwrap();
        assert_eq!(line, vec![vec![-1.0], vec![0.0], vec![1.0]]);
    }

    #[test]
    fn partition_matches_worked_example() {
        let p = build_multiclass_partition(2, 0.2, 2).unwrap();
        assert_eq!(p.gap_half_width(), 0.1);
        let d0 = &p.slabs()[0].intervals[0];
        let d1 = &p.slabs()[1].intervals[0];
        assert_eq!((d0.lo, d0.hi), (-1.0, -0.1));
        assert_eq!((d1.lo, d1.hi), (0.1, 1.0));
        assert_eq!(p.slabs()[0].intervals[1].lo, -1.0);
        assert_eq!(p.removed_measure(), 0.1);
    }

    #[test]
    fn removed_measure_is_half_delta() {
        for (c, delta) in [(2, 0.2), (3, 0.3), (5, 0.12), (4, 0.5)] {
            let p = build_multiclass_partition(c, delta, 1).unwrap();
            let removed = p.removed_measure();
            assert!(
                (removed - delta / 2.0).abs() < 1e-15,
                "c={c} delta={delta}: removed {removed}"
            );
            assert!(removed <= delta);
        }
    }

    #[test]
    fn small_delta_approaches_uniform_pieces() {
        let p = build_multiclass_partition(2, 1e-9, 1).unwrap();
        let d0 = &p.slabs()[0].intervals[0];
        assert!((d0.hi - 0.0).abs() < 1e-8);
    }

    #[test]
    fn partition_rejects_bad_inputs() {
        assert!(build_multiclass_partition(1, 0.2, 1).is_err());
        assert!(build_multiclass_partition(2, 0.0, 1).is_err());
        assert!(build_multiclass_partition(2, 1.0, 1).is_err());
    }

    #[test]
    fn locate_classifies_slabs_and_gaps() {
        let p = build_multiclass_partition(2, 0.2, 1).unwrap();
        assert_eq!(p.locate(-0.5).unwrap(), SlabLocation::Slab(0));
        assert_eq!(p.locate(-0.1).unwrap(), SlabLocation::Slab(0));
        assert_eq!(p.locate(0.1).unwrap(), SlabLocation::Slab(1));
        match p.locate(0.0).unwrap() {
            SlabLocation::Gap { left, t } => {
                assert_eq!(left, 0);
                assert!((t - 0.5).abs() < 1e-12);
            }
            other => panic!("expected gap, got {other:?}"),
        }
        assert!(p.locate(1.5).is_err());
    }

    fn two_circle_map() -> MulticlassGenerator {
        let m0 = EmbeddedManifold::circle();
        let m1 = EmbeddedManifold::circle_with(1.0, [3.0, 0.0]);
        let g0 = build_generator(&m0, &ChartPoint::new(vec![0.0]), PI).unwrap();
        let g1 = build_generator(&m1, &ChartPoint::new(vec![0.0]), PI).unwrap();
        let p = build_multiclass_partition(2, 0.2, 1).unwrap();
        build_multiclass_map(p, vec![g0, g1]).unwrap()
    }

    #[test]
    fn multiclass_map_is_exact_on_slab_faces() {
        let mc = two_circle_map();
        // Right face of slab 0 sits at x = −0.1; the gap value at t → 0
        // must equal the slab value bit for bit.
        let face = mc.map(&[-0.1]).unwrap();
        let renormalized = mc.generators()[0].map(&[1.0]).unwrap();
        assert_eq!(face.coords, renormalized.coords);
    }

    #[test]
    fn gap_midpoint_averages_neighbors() {
        let mc = two_circle_map();
        let mid = mc.map(&[0.0]).unwrap();
        let a = mc.map(&[-0.1]).unwrap();
        let b = mc.map(&[0.1]).unwrap();
        for k in 0..2 {
            assert!((mid.coords[k] - 0.5 * (a.coords[k] + b.coords[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn multiclass_map_is_continuous_across_faces() {
        let mc = two_circle_map();
        let eps = 1e-7;
        // Crossing from slab into gap near both faces. The slab-side
        // angular rate is π·(2 / 0.9) ≈ 7; the gap-side interpolation rate
        // is (circle offset 3) / (gap width 0.2) = 15.
        for (inside, outside) in [(-0.1, -0.1 + eps), (0.1, 0.1 - eps)] {
            let a = mc.map(&[inside]).unwrap();
            let b = mc.map(&[outside]).unwrap();
            assert!(
                a.distance(&b) < 1e-9 + 20.0 * eps,
                "jump {} at x-face pair ({inside}, {outside})",
                a.distance(&b)
            );
        }
    }

    #[test]
    fn per_class_images_cover_their_circles() {
        let mc = two_circle_map();
        for class in 0..2 {
            let grid = mc.class_grid(class, 256).unwrap();
            let mut rows = Vec::with_capacity(grid.len());
            for z in &grid {
                rows.push(mc.map(z).unwrap().coords);
            }
            let image = PointCloud::from_rows(&rows).unwrap();
            let manifold = mc.generators()[class].manifold();
            let sample = manifold.sample_area_uniform(512, 77);
            let reference = PointCloud::from_ambient(&manifold.embed_all(&sample).unwrap()).unwrap();
            let d = hausdorff(&image, &reference).unwrap();
            assert!(d < 0.05, "class {class} coverage distance {d}");
        }
    }

    #[test]
    fn multiclass_validation_errors() {
        let m0 = EmbeddedManifold::circle();
        let g0 = build_generator(&m0, &ChartPoint::new(vec![0.0]), PI).unwrap();
        let p = build_multiclass_partition(2, 0.2, 1).unwrap();
        assert!(build_multiclass_map(p.clone(), vec![g0.clone()]).is_err());
        // Generators may have lower latent dimension than the partition,
        // never higher.
        let m_sph = EmbeddedManifold::sphere();
        let g_sph = build_generator(&m_sph, &ChartPoint::new(vec![1.0, 1.0]), PI).unwrap();
        assert!(build_multiclass_map(p, vec![g_sph.clone(), g_sph]).is_err());
    }
}
