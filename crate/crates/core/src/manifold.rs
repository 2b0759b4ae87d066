//! Embedded manifolds described by a single chart.
//!
//! A manifold here is a box `chart_domain` in ℝ^d together with a smooth
//! embedding into ℝⁿ given in closed form. The Riemannian structure is the
//! pullback of the ambient Euclidean metric: with Jacobian J(p) the metric is
//! g = JᵀJ, and the Christoffel symbols follow from central finite
//! differences of g:
//!
//!   Γ^k_{ij} = ½ g^{kl} (∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}).
//!
//! Periodic axes are half-open `[0, 2π)`; values are wrapped by callers, not
//! silently by these operations. The sphere chart excludes a band of width
//! `singular_margin` around both poles, where the chart metric degenerates.
//!
//! Built-in catalog (addressable by string id):
//!   - `circle`         unit circle in ℝ²; variants with radius/center offset
//!   - `sphere`         unit sphere in ℝ³, chart (θ, φ) ↦ (sinθcosφ, sinθsinφ, cosθ)
//!   - `clifford-torus` (u, v) ↦ (cos u, sin u, cos v, sin v) in ℝ⁴; g = I exactly
//!   - `torus3`         doughnut in ℝ³ with radii R = 2, r = 0.5

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{seeded_rng, HaltonSequence};
use rand::Rng;

/// Relative step for first-order central differences.
pub const FIRST_ORDER_STEP: f64 = 1e-5;
/// Relative step for the metric derivatives inside Christoffel symbols.
pub const SECOND_ORDER_STEP: f64 = 1e-4;
/// Width of the excluded band around chart-coordinate singularities.
pub const SINGULAR_MARGIN: f64 = 1e-2;

const TAU: f64 = std::f64::consts::TAU;

/// Closed interval of chart parameters (half-open when the axis is periodic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Axis-aligned box in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub intervals: Vec<Interval>,
}

impl BoxRegion {
    pub fn new(intervals: Vec<Interval>) -> Self {
        BoxRegion { intervals }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    /// Product of side lengths (Lebesgue volume of the box itself).
    pub fn euclidean_volume(&self) -> f64 {
        self.intervals.iter().map(Interval::length).product()
    }

    pub fn contains(&self, coords: &[f64], tol: f64) -> bool {
        coords.len() == self.dim()
            && coords
                .iter()
                .zip(&self.intervals)
                .all(|(x, iv)| *x >= iv.lo - tol && *x <= iv.hi + tol)
    }
}

/// Point in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        ChartPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Point in ambient Euclidean space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub coords: Vec<f64>,
}

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        AmbientPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &AmbientPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Tangent vector in chart components, attached to a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: Vec<f64>) -> Self {
        TangentVector { base, components }
    }
}

/// Pullback metric g = JᵀJ at a chart point.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    pub matrix: Array2<f64>,
}

impl MetricTensor {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += a[i] * self.matrix[[i, j]] * b[j];
            }
        }
        s
    }

    /// Metric norm sqrt(vᵀ g v).
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn det(&self) -> f64 {
        linalg::determinant(&self.matrix.view())
    }
}

/// Christoffel symbols Γ^k_{ij}, indexed `gamma[[k, i, j]]`.
#[derive(Debug, Clone)]
pub struct ChristoffelSymbols {
    pub gamma: Array3<f64>,
}

impl ChristoffelSymbols {
    pub fn dim(&self) -> usize {
        self.gamma.shape()[0]
    }
}

/// Closed-form shapes backing the catalog.
#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Circle { radius: f64, center: [f64; 2] },
    Sphere,
    CliffordTorus,
    Torus3 { major: f64, minor: f64 },
    Segment,
}

/// A manifold given by one chart and a closed-form embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedManifold {
    id: &'static str,
    shape: Shape,
    chart_domain: BoxRegion,
    periodic: Vec<bool>,
    singular_margin: f64,
    analytic_diameter: Option<f64>,
}

impl EmbeddedManifold {
    /// Unit circle in ℝ².
    pub fn circle() -> Self {
        Self::circle_with(1.0, [0.0, 0.0])
    }

    /// Circle with arbitrary radius and center.
    pub fn circle_with(radius: f64, center: [f64; 2]) -> Self {
        assert!(radius > 0.0, "circle radius must be positive");
        EmbeddedManifold {
            id: "circle",
            shape: Shape::Circle { radius, center },
            chart_domain: BoxRegion::new(vec![Interval::new(0.0, TAU)]),
            periodic: vec![true],
            singular_margin: 0.0,
            analytic_diameter: Some(std::f64::consts::PI * radius),
        }
    }

    /// Unit sphere in ℝ³ with the polar chart; pole bands excluded.
    pub fn sphere() -> Self {
        EmbeddedManifold {
            id: "sphere",
            shape: Shape::Sphere,
            chart_domain: BoxRegion::new(vec![
                Interval::new(SINGULAR_MARGIN, std::f64::consts::PI - SINGULAR_MARGIN),
                Interval::new(0.0, TAU),
            ]),
            periodic: vec![false, true],
            singular_margin: SINGULAR_MARGIN,
            analytic_diameter: Some(std::f64::consts::PI),
        }
    }

    /// Flat torus (cos u, sin u, cos v, sin v) in ℝ⁴; the pullback metric is
    /// the identity, so chart straight lines are geodesics.
    pub fn clifford_torus() -> Self {
        EmbeddedManifold {
            id: "clifford-torus",
            shape: Shape::CliffordTorus,
            chart_domain: BoxRegion::new(vec![
                Interval::new(0.0, TAU),
                Interval::new(0.0, TAU),
            ]),
            periodic: vec![true, true],
            singular_margin: 0.0,
            analytic_diameter: Some(std::f64::consts::PI * std::f64::consts::SQRT_2),
        }
    }

    /// Doughnut torus in ℝ³ with major radius 2 and minor radius 0.5.
    pub fn torus3() -> Self {
        EmbeddedManifold {
            id: "torus3",
            shape: Shape::Torus3 {
                major: 2.0,
                minor: 0.5,
            },
            chart_domain: BoxRegion::new(vec![
                Interval::new(0.0, TAU),
                Interval::new(0.0, TAU),
            ]),
            periodic: vec![true, true],
            singular_margin: 0.0,
            analytic_diameter: None,
        }
    }

    /// Straight unit segment x ↦ (x, 0); the simplest non-periodic chart,
    /// used by tests that need a flat, boundary-having example.
    pub fn segment() -> Self {
        EmbeddedManifold {
            id: "segment",
            shape: Shape::Segment,
            chart_domain: BoxRegion::new(vec![Interval::new(0.0, 1.0)]),
            periodic: vec![false],
            singular_margin: 0.0,
            analytic_diameter: Some(1.0),
        }
    }

    /// Catalog lookup by string id.
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "circle" => Ok(Self::circle()),
            "sphere" => Ok(Self::sphere()),
            "clifford-torus" => Ok(Self::clifford_torus()),
            "torus3" => Ok(Self::torus3()),
            other => Err(Error::InvalidArgument(format!(
                "unknown manifold id {other:?}; known: circle, sphere, clifford-torus, torus3"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        self.id
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.chart_domain.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        match self.shape {
            Shape::Circle { .. } | Shape::Segment => 2,
            Shape::Sphere | Shape::Torus3 { .. } => 3,
            Shape::CliffordTorus => 4,
        }
    }

    pub fn chart_domain(&self) -> &BoxRegion {
        &self.chart_domain
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn singular_margin(&self) -> f64 {
        self.singular_margin
    }

    pub fn analytic_diameter(&self) -> Option<f64> {
        self.analytic_diameter
    }

    /// Validates that a point lies inside the chart domain. Periodic axes are
    /// half-open, non-periodic axes closed.
    pub fn contains(&self, p: &ChartPoint) -> Result<()> {
        if p.dim() != self.intrinsic_dim() {
            return Err(Error::Shape(format!(
                "chart point has dimension {}, manifold chart has {}",
                p.dim(),
                self.intrinsic_dim()
            )));
        }
        for (axis, (&x, iv)) in p.coords.iter().zip(&self.chart_domain.intervals).enumerate() {
            let ok = if self.periodic[axis] {
                x >= iv.lo && x < iv.hi
            } else {
                x >= iv.lo && x <= iv.hi
            };
            if !ok || !x.is_finite() {
                return Err(Error::OutsideDomain {
                    axis,
                    value: x,
                    lo: iv.lo,
                    hi: iv.hi,
                    periodic: self.periodic[axis],
                });
            }
        }
        Ok(())
    }

    /// Wraps periodic coordinates into their canonical half-open intervals.
    /// Non-periodic coordinates pass through untouched.
    pub fn wrap_periodic(&self, coords: &mut [f64]) {
        for (axis, x) in coords.iter_mut().enumerate() {
            if self.periodic[axis] {
                let iv = self.chart_domain.intervals[axis];
                let len = iv.length();
                let mut w = (*x - iv.lo) % len;
                if w < 0.0 {
                    w += len;
                }
                *x = iv.lo + w;
                if *x >= iv.hi {
                    *x = iv.lo;
                }
            }
        }
    }

    /// Raw embedding formulas with no domain validation. Trigonometric
    /// charts evaluate correctly for out-of-range periodic coordinates,
    /// which is what finite-difference stencils and integrator stages need.
    pub fn embed_unchecked(&self, c: &[f64]) -> Vec<f64> {
        match self.shape {
            Shape::Circle { radius, center } => {
                let t = c[0];
                vec![
                    center[0] + radius * t.cos(),
                    center[1] + radius * t.sin(),
                ]
            }
            Shape::Sphere => {
                let (theta, phi) = (c[0], c[1]);
                let st = theta.sin();
                vec![st * phi.cos(), st * phi.sin(), theta.cos()]
            }
            Shape::CliffordTorus => {
                let (u, v) = (c[0], c[1]);
                vec![u.cos(), u.sin(), v.cos(), v.sin()]
            }
            Shape::Torus3 { major, minor } => {
                let (theta, phi) = (c[0], c[1]);
                let ring = major + minor * theta.cos();
                vec![ring * phi.cos(), ring * phi.sin(), minor * theta.sin()]
            }
            Shape::Segment => vec![c[0], 0.0],
        }
    }

    /// Embedding image of a validated chart point.
    pub fn embed(&self, p: &ChartPoint) -> Result<AmbientPoint> {
        self.contains(p)?;
        Ok(AmbientPoint::new(self.embed_unchecked(&p.coords)))
    }

    /// Closed-form Jacobian columns ∂(embedding)/∂(coord_j), unvalidated.
    fn jacobian_unchecked(&self, c: &[f64]) -> Array2<f64> {
        match self.shape {
            Shape::Circle { radius, .. } => {
                let t = c[0];
                Array2::from_shape_vec((2, 1), vec![-radius * t.sin(), radius * t.cos()])
                    .expect("static shape")
            }
            Shape::Sphere => {
                let (theta, phi) = (c[0], c[1]);
                let (st, ct) = (theta.sin(), theta.cos());
                let (sp, cp) = (phi.sin(), phi.cos());
                Array2::from_shape_vec(
                    (3, 2),
                    vec![ct * cp, -st * sp, ct * sp, st * cp, -st, 0.0],
                )
                .expect("static shape")
            }
            Shape::CliffordTorus => {
                let (u, v) = (c[0], c[1]);
                Array2::from_shape_vec(
                    (4, 2),
                    vec![-u.sin(), 0.0, u.cos(), 0.0, 0.0, -v.sin(), 0.0, v.cos()],
                )
                .expect("static shape")
            }
            Shape::Torus3 { major, minor } => {
                let (theta, phi) = (c[0], c[1]);
                let ring = major + minor * theta.cos();
                let (st, ct) = (theta.sin(), theta.cos());
                let (sp, cp) = (phi.sin(), phi.cos());
                Array2::from_shape_vec(
                    (3, 2),
                    vec![
                        -minor * st * cp,
                        -ring * sp,
                        -minor * st * sp,
                        ring * cp,
                        minor * ct,
                        0.0,
                    ],
                )
                .expect("static shape")
            }
            Shape::Segment => {
                Array2::from_shape_vec((2, 1), vec![1.0, 0.0]).expect("static shape")
            }
        }
    }

    /// Embedding Jacobian at a validated point. The catalog supplies closed
    /// forms; the finite-difference pipeline remains available separately
    /// through [`EmbeddedManifold::finite_difference_jacobian`].
    pub fn embedding_jacobian(&self, p: &ChartPoint) -> Result<Array2<f64>> {
        self.contains(p)?;
        Ok(self.jacobian_unchecked(&p.coords))
    }

    /// Jacobian by central finite differences with relative step 1e-5.
    ///
    /// Non-periodic coordinates must sit at least one step inside the chart
    /// boundary; periodic stencil points wrap through the trigonometric
    /// formulas.
    pub fn finite_difference_jacobian(&self, p: &ChartPoint) -> Result<Array2<f64>> {
        self.contains(p)?;
        let d = self.intrinsic_dim();
        let n = self.ambient_dim();
        let mut jac = Array2::zeros((n, d));
        let mut plus = p.coords.clone();
        let mut minus = p.coords.clone();
        for j in 0..d {
            let h = FIRST_ORDER_STEP * p.coords[j].abs().max(1.0);
            if !self.periodic[j] {
                let iv = self.chart_domain.intervals[j];
                if p.coords[j] - h < iv.lo || p.coords[j] + h > iv.hi {
                    return Err(Error::InsufficientMargin {
                        axis: j,
                        value: p.coords[j],
                        margin: h,
                    });
                }
            }
            plus[j] = p.coords[j] + h;
            minus[j] = p.coords[j] - h;
            let fp = self.embed_unchecked(&plus);
            let fm = self.embed_unchecked(&minus);
            for i in 0..n {
                jac[[i, j]] = (fp[i] - fm[i]) / (2.0 * h);
            }
            plus[j] = p.coords[j];
            minus[j] = p.coords[j];
        }
        Ok(jac)
    }

    /// Pullback metric g = JᵀJ with no domain validation.
    pub fn metric_unchecked(&self, c: &[f64]) -> Array2<f64> {
        let j = self.jacobian_unchecked(c);
        let d = j.ncols();
        let mut g = Array2::zeros((d, d));
        for a in 0..d {
            for b in a..d {
                let mut s = 0.0;
                for row in 0..j.nrows() {
                    s += j[[row, a]] * j[[row, b]];
                }
                g[[a, b]] = s;
                g[[b, a]] = s;
            }
        }
        g
    }

    /// Pullback metric at a validated chart point.
    pub fn metric(&self, p: &ChartPoint) -> Result<MetricTensor> {
        self.contains(p)?;
        Ok(MetricTensor {
            matrix: self.metric_unchecked(&p.coords),
        })
    }

    /// Christoffel symbols with no domain validation; still fails when the
    /// metric is numerically singular.
    pub fn christoffel_unchecked(&self, c: &[f64]) -> Result<ChristoffelSymbols> {
        let d = self.intrinsic_dim();
        let g = self.metric_unchecked(c);
        let ginv = linalg::inverse(&g.view(), "metric inversion")?;

        // dg[[i, a, b]] = ∂_i g_{ab}, central differences.
        let mut dg = Array3::zeros((d, d, d));
        let mut plus = c.to_vec();
        let mut minus = c.to_vec();
        for i in 0..d {
            let h = SECOND_ORDER_STEP * c[i].abs().max(1.0);
            plus[i] = c[i] + h;
            minus[i] = c[i] - h;
            let gp = self.metric_unchecked(&plus);
            let gm = self.metric_unchecked(&minus);
            for a in 0..d {
                for b in 0..d {
                    dg[[i, a, b]] = (gp[[a, b]] - gm[[a, b]]) / (2.0 * h);
                }
            }
            plus[i] = c[i];
            minus[i] = c[i];
        }

        let mut gamma = Array3::zeros((d, d, d));
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += ginv[[k, l]] * (dg[[i, j, l]] + dg[[j, i, l]] - dg[[l, i, j]]);
                    }
                    gamma[[k, i, j]] = 0.5 * s;
                }
            }
        }
        Ok(ChristoffelSymbols { gamma })
    }

    /// Christoffel symbols at a validated chart point. Metric derivatives use
    /// central differences with relative step 1e-4; non-periodic coordinates
    /// need that much interior margin.
    pub fn christoffel(&self, p: &ChartPoint) -> Result<ChristoffelSymbols> {
        self.contains(p)?;
        for j in 0..self.intrinsic_dim() {
            if !self.periodic[j] {
                let h = SECOND_ORDER_STEP * p.coords[j].abs().max(1.0);
                let iv = self.chart_domain.intervals[j];
                if p.coords[j] - h < iv.lo || p.coords[j] + h > iv.hi {
                    return Err(Error::InsufficientMargin {
                        axis: j,
                        value: p.coords[j],
                        margin: h,
                    });
                }
            }
        }
        self.christoffel_unchecked(&p.coords)
    }

    /// Riemannian volume of a chart box by tensor-grid midpoint quadrature of
    /// sqrt(det g), `resolution` cells per axis.
    pub fn volume(&self, region: &BoxRegion, resolution: usize) -> Result<f64> {
        let d = self.intrinsic_dim();
        if region.dim() != d {
            return Err(Error::Shape(format!(
                "volume region has dimension {}, chart has {}",
                region.dim(),
                d
            )));
        }
        if resolution == 0 {
            return Err(Error::InvalidArgument("quadrature resolution must be positive".into()));
        }
        for (axis, (riv, div)) in region
            .intervals
            .iter()
            .zip(&self.chart_domain.intervals)
            .enumerate()
        {
            if riv.lo > riv.hi {
                return Err(Error::InvalidArgument(format!(
                    "region interval on axis {axis} has lo {} > hi {}",
                    riv.lo, riv.hi
                )));
            }
            if riv.lo < div.lo - 1e-12 || riv.hi > div.hi + 1e-12 {
                return Err(Error::OutsideDomain {
                    axis,
                    value: if riv.lo < div.lo - 1e-12 { riv.lo } else { riv.hi },
                    lo: div.lo,
                    hi: div.hi,
                    periodic: self.periodic[axis],
                });
            }
        }
        if region.intervals.iter().any(|iv| iv.length() == 0.0) {
            return Ok(0.0);
        }

        let steps: Vec<f64> = region
            .intervals
            .iter()
            .map(|iv| iv.length() / resolution as f64)
            .collect();
        let cell_volume: f64 = steps.iter().product();
        let mut idx = vec![0usize; d];
        let mut coords = vec![0.0; d];
        let mut sum = 0.0;
        loop {
            for a in 0..d {
                coords[a] = region.intervals[a].lo + (idx[a] as f64 + 0.5) * steps[a];
            }
            let det = linalg::determinant(&self.metric_unchecked(&coords).view());
            sum += det.max(0.0).sqrt();
            // Odometer increment over the d-dimensional grid.
            let mut a = 0;
            loop {
                if a == d {
                    return Ok(sum * cell_volume);
                }
                idx[a] += 1;
                if idx[a] < resolution {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    /// Closed-form exponential map where one exists: circle (angle addition),
    /// sphere (great circle in ambient coordinates), Clifford torus (chart
    /// straight lines). `v` is in chart components at `q`.
    pub fn analytic_exp(&self, q: &ChartPoint, v: &[f64]) -> Option<AmbientPoint> {
        match self.shape {
            Shape::Circle { .. } => {
                // Constant metric: chart velocity is constant along geodesics.
                let c = [q.coords[0] + v[0]];
                Some(AmbientPoint::new(self.embed_unchecked(&c)))
            }
            Shape::Sphere => {
                let p = self.embed_unchecked(&q.coords);
                let jac = self.jacobian_unchecked(&q.coords);
                let mut t = [0.0; 3];
                for i in 0..3 {
                    t[i] = jac[[i, 0]] * v[0] + jac[[i, 1]] * v[1];
                }
                let speed = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
                if speed == 0.0 {
                    return Some(AmbientPoint::new(p));
                }
                let (s, c) = speed.sin_cos();
                let out: Vec<f64> = (0..3).map(|i| c * p[i] + s * t[i] / speed).collect();
                Some(AmbientPoint::new(out))
            }
            Shape::CliffordTorus => {
                let c = [q.coords[0] + v[0], q.coords[1] + v[1]];
                Some(AmbientPoint::new(self.embed_unchecked(&c)))
            }
            Shape::Torus3 { .. } | Shape::Segment => None,
        }
    }

    /// Inverse of the chart map on ambient points of the manifold. Output
    /// coordinates land in the canonical intervals; points inside excluded
    /// singular bands are returned as computed, without validation.
    pub fn chart_inverse(&self, a: &AmbientPoint) -> Result<ChartPoint> {
        if a.dim() != self.ambient_dim() {
            return Err(Error::Shape(format!(
                "ambient point has dimension {}, manifold ambient is {}",
                a.dim(),
                self.ambient_dim()
            )));
        }
        let c = &a.coords;
        let wrap = |t: f64| {
            let mut w = t % TAU;
            if w < 0.0 {
                w += TAU;
            }
            if w >= TAU {
                w = 0.0;
            }
            w
        };
        let coords = match self.shape {
            Shape::Circle { center, .. } => {
                vec![wrap((c[1] - center[1]).atan2(c[0] - center[0]))]
            }
            Shape::Sphere => {
                let theta = c[2].clamp(-1.0, 1.0).acos();
                vec![theta, wrap(c[1].atan2(c[0]))]
            }
            Shape::CliffordTorus => {
                vec![wrap(c[1].atan2(c[0])), wrap(c[3].atan2(c[2]))]
            }
            Shape::Torus3 { major, minor } => {
                let ring = (c[0] * c[0] + c[1] * c[1]).sqrt();
                let theta = wrap((c[2] / minor).atan2((ring - major) / minor));
                vec![theta, wrap(c[1].atan2(c[0]))]
            }
            Shape::Segment => vec![c[0]],
        };
        Ok(ChartPoint::new(coords))
    }

    /// Marginal density table for one axis: integrates sqrt(det g) over the
    /// remaining axes at `cross_res` midpoints each. Valid as a sampling
    /// marginal because every catalog density factors across axes.
    fn marginal_cdf(&self, axis: usize, table_res: usize, cross_res: usize) -> Vec<f64> {
        let d = self.intrinsic_dim();
        let iv = self.chart_domain.intervals[axis];
        let h = iv.length() / table_res as f64;
        let mut coords = vec![0.0; d];
        let mut cdf = Vec::with_capacity(table_res + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for j in 0..table_res {
            coords[axis] = iv.lo + (j as f64 + 0.5) * h;
            let mut density = 0.0;
            if d == 1 {
                density = linalg::determinant(&self.metric_unchecked(&coords).view())
                    .max(0.0)
                    .sqrt();
            } else {
                // One cross axis in the catalog (d ≤ 2); loop stays generic.
                let mut cross_idx = vec![0usize; d - 1];
                let cross_axes: Vec<usize> = (0..d).filter(|a| *a != axis).collect();
                'cross: loop {
                    for (slot, &a) in cross_axes.iter().enumerate() {
                        let civ = self.chart_domain.intervals[a];
                        let ch = civ.length() / cross_res as f64;
                        coords[a] = civ.lo + (cross_idx[slot] as f64 + 0.5) * ch;
                    }
                    let w: f64 = cross_axes
                        .iter()
                        .map(|&a| self.chart_domain.intervals[a].length() / cross_res as f64)
                        .product();
                    density += w
                        * linalg::determinant(&self.metric_unchecked(&coords).view())
                            .max(0.0)
                            .sqrt();
                    let mut slot = 0;
                    loop {
                        if slot == d - 1 {
                            break 'cross;
                        }
                        cross_idx[slot] += 1;
                        if cross_idx[slot] < cross_res {
                            break;
                        }
                        cross_idx[slot] = 0;
                        slot += 1;
                    }
                }
            }
            acc += density * h;
            cdf.push(acc);
        }
        cdf
    }

    /// Area-uniform sample as a low-discrepancy net: a seeded shifted Halton
    /// stream pushed through per-axis inverse CDFs of the marginal densities.
    /// Uniform with respect to the Riemannian measure in the resolution of
    /// the CDF tables, and far more evenly covering than an iid draw of the
    /// same size.
    pub fn sample_area_uniform(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        let d = self.intrinsic_dim();
        let table_res = 4096;
        let cdfs: Vec<Vec<f64>> = (0..d).map(|a| self.marginal_cdf(a, table_res, 256)).collect();
        let mut seq = HaltonSequence::new(d, seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u = seq.next_point();
            let coords: Vec<f64> = (0..d)
                .map(|a| {
                    let iv = self.chart_domain.intervals[a];
                    let cdf = &cdfs[a];
                    let total = *cdf.last().expect("nonempty cdf");
                    let target = u[a] * total;
                    // Last cell whose left edge is ≤ target.
                    let j = match cdf.binary_search_by(|c| c.partial_cmp(&target).expect("finite")) {
                        Ok(exact) => exact.min(table_res - 1),
                        Err(ins) => ins.saturating_sub(1).min(table_res - 1),
                    };
                    let span = cdf[j + 1] - cdf[j];
                    let frac = if span > 0.0 { (target - cdf[j]) / span } else { 0.5 };
                    let h = iv.length() / table_res as f64;
                    let x = iv.lo + (j as f64 + frac) * h;
                    x.min(iv.hi - 1e-12 * iv.length().max(1.0)).max(iv.lo)
                })
                .collect();
            out.push(ChartPoint::new(coords));
        }
        out
    }

    /// Area-uniform iid sample by rejection against sqrt(det g) under a
    /// scanned upper envelope.
    pub fn sample_area_uniform_iid(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        let d = self.intrinsic_dim();
        let mut rng = seeded_rng(seed);
        // Envelope: coarse scan of the density with 10% headroom.
        let scan = 64usize;
        let mut sup: f64 = 0.0;
        let mut idx = vec![0usize; d];
        let mut coords = vec![0.0; d];
        'scan: loop {
            for a in 0..d {
                let iv = self.chart_domain.intervals[a];
                coords[a] = iv.lo + (idx[a] as f64 + 0.5) * iv.length() / scan as f64;
            }
            sup = sup.max(
                linalg::determinant(&self.metric_unchecked(&coords).view())
                    .max(0.0)
                    .sqrt(),
            );
            let mut a = 0;
            loop {
                if a == d {
                    break 'scan;
                }
                idx[a] += 1;
                if idx[a] < scan {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
        let envelope = sup * 1.1;

        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let coords: Vec<f64> = (0..d)
                .map(|a| {
                    let iv = self.chart_domain.intervals[a];
                    iv.lo + rng.random::<f64>() * iv.length()
                })
                .collect();
            let density = linalg::determinant(&self.metric_unchecked(&coords).view())
                .max(0.0)
                .sqrt();
            if rng.random::<f64>() * envelope <= density {
                out.push(ChartPoint::new(coords));
            }
        }
        out
    }

    /// Embeds a batch of chart points.
    pub fn embed_all(&self, points: &[ChartPoint]) -> Result<Vec<AmbientPoint>> {
        points.iter().map(|p| self.embed(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn circle_embeds_cardinal_points() {
        let m = EmbeddedManifold::circle();
        let p0 = m.embed(&ChartPoint::new(vec![0.0])).unwrap();
        assert_eq!(p0.coords, vec![1.0, 0.0]);
        let ppi = m.embed(&ChartPoint::new(vec![PI])).unwrap();
        assert_close(ppi.coords[0], -1.0, 1e-15);
        assert_close(ppi.coords[1], 0.0, 1e-15);
    }

    #[test]
    fn sphere_embeds_equator_point() {
        let m = EmbeddedManifold::sphere();
        let p = m.embed(&ChartPoint::new(vec![PI / 2.0, 0.0])).unwrap();
        assert_close(p.coords[0], 1.0, 1e-15);
        assert_close(p.coords[1], 0.0, 1e-15);
        assert_close(p.coords[2], 0.0, 1e-15);
    }

    #[test]
    fn embed_rejects_out_of_domain_points() {
        let m = EmbeddedManifold::circle();
        let err = m.embed(&ChartPoint::new(vec![TAU])).unwrap_err();
        match err {
            Error::OutsideDomain { axis, .. } => assert_eq!(axis, 0),
            other => panic!("unexpected error {other:?}"),
        }
        let s = EmbeddedManifold::sphere();
        assert!(s.embed(&ChartPoint::new(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn circle_jacobian_at_zero() {
        let m = EmbeddedManifold::circle();
        let j = m.embedding_jacobian(&ChartPoint::new(vec![0.0])).unwrap();
        assert_close(j[[0, 0]], 0.0, 1e-15);
        assert_close(j[[1, 0]], 1.0, 1e-15);
    }

    #[test]
    fn segment_jacobian_is_unit_column() {
        let m = EmbeddedManifold::segment();
        let j = m.embedding_jacobian(&ChartPoint::new(vec![0.5])).unwrap();
        assert_eq!(j[[0, 0]], 1.0);
        assert_eq!(j[[1, 0]], 0.0);
        let fd = m.finite_difference_jacobian(&ChartPoint::new(vec![0.5])).unwrap();
        assert_close(fd[[0, 0]], 1.0, 1e-10);
        assert_close(fd[[1, 0]], 0.0, 1e-10);
    }

    #[test]
    fn sphere_jacobian_columns_orthonormal_on_equator() {
        let m = EmbeddedManifold::sphere();
        let j = m
            .embedding_jacobian(&ChartPoint::new(vec![PI / 2.0, 0.0]))
            .unwrap();
        let col = |k: usize| (0..3).map(|i| j[[i, k]]).collect::<Vec<_>>();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let c0 = col(0);
        let c1 = col(1);
        assert_close(dot(&c0, &c0), 1.0, 1e-14);
        assert_close(dot(&c1, &c1), 1.0, 1e-14);
        assert_close(dot(&c0, &c1), 0.0, 1e-14);
    }

    #[test]
    fn finite_difference_matches_analytic_jacobian() {
        for m in [
            EmbeddedManifold::circle(),
            EmbeddedManifold::sphere(),
            EmbeddedManifold::clifford_torus(),
            EmbeddedManifold::torus3(),
        ] {
            let p = ChartPoint::new(match m.intrinsic_dim() {
                1 => vec![1.1],
                _ => vec![1.1, 2.3],
            });
            let a = m.embedding_jacobian(&p).unwrap();
            let f = m.finite_difference_jacobian(&p).unwrap();
            for i in 0..m.ambient_dim() {
                for j in 0..m.intrinsic_dim() {
                    assert_close(a[[i, j]], f[[i, j]], 1e-9);
                }
            }
        }
    }

    #[test]
    fn fd_jacobian_demands_interior_margin() {
        let m = EmbeddedManifold::segment();
        let err = m
            .finite_difference_jacobian(&ChartPoint::new(vec![0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::InsufficientMargin { .. }));
    }

    #[test]
    fn circle_metric_is_identity() {
        let m = EmbeddedManifold::circle();
        for t in [0.0, 1.0, 3.0, 6.0] {
            let g = m.metric(&ChartPoint::new(vec![t])).unwrap();
            assert_close(g.matrix[[0, 0]], 1.0, 1e-14);
        }
    }

    #[test]
    fn sphere_metric_matches_closed_form() {
        let m = EmbeddedManifold::sphere();
        for (theta, phi) in [(0.4, 0.0), (1.2, 2.0), (2.8, 5.5)] {
            let g = m.metric(&ChartPoint::new(vec![theta, phi])).unwrap();
            assert_close(g.matrix[[0, 0]], 1.0, 1e-13);
            assert_close(g.matrix[[1, 1]], theta.sin().powi(2), 1e-13);
            assert_close(g.matrix[[0, 1]], 0.0, 1e-13);
        }
    }

    #[test]
    fn clifford_metric_is_identity_everywhere() {
        let m = EmbeddedManifold::clifford_torus();
        for (u, v) in [(0.0, 0.0), (2.0, 4.0), (5.9, 1.3)] {
            let g = m.metric(&ChartPoint::new(vec![u, v])).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_close(g.matrix[[i, j]], expect, 1e-14);
                }
            }
        }
    }

    #[test]
    fn torus3_metric_matches_closed_form() {
        let m = EmbeddedManifold::torus3();
        let (theta, phi) = (0.9, 4.2);
        let g = m.metric(&ChartPoint::new(vec![theta, phi])).unwrap();
        let ring = 2.0 + 0.5 * theta.cos();
        assert_close(g.matrix[[0, 0]], 0.25, 1e-13);
        assert_close(g.matrix[[1, 1]], ring * ring, 1e-13);
        assert_close(g.matrix[[0, 1]], 0.0, 1e-13);
    }

    #[test]
    fn christoffel_vanishes_on_flat_charts() {
        for m in [EmbeddedManifold::circle(), EmbeddedManifold::clifford_torus()] {
            let p = ChartPoint::new(match m.intrinsic_dim() {
                1 => vec![2.0],
                _ => vec![2.0, 5.0],
            });
            let ch = m.christoffel(&p).unwrap();
            for v in ch.gamma.iter() {
                assert!(v.abs() < 1e-9, "Γ entry {v} should vanish");
            }
        }
    }

    #[test]
    fn sphere_christoffel_matches_closed_form() {
        let m = EmbeddedManifold::sphere();
        for theta in [0.5, 1.0, 2.2] {
            let ch = m.christoffel(&ChartPoint::new(vec![theta, 1.0])).unwrap();
            // Nonzero entries of the round metric in polar coordinates.
            assert_close(ch.gamma[[0, 1, 1]], -theta.sin() * theta.cos(), 1e-6);
            assert_close(ch.gamma[[1, 0, 1]], theta.cos() / theta.sin(), 1e-6);
            assert_close(ch.gamma[[1, 1, 0]], theta.cos() / theta.sin(), 1e-6);
            assert_close(ch.gamma[[0, 0, 0]], 0.0, 1e-6);
            assert_close(ch.gamma[[0, 0, 1]], 0.0, 1e-6);
            assert_close(ch.gamma[[1, 1, 1]], 0.0, 1e-6);
        }
    }

    #[test]
    fn torus3_christoffel_matches_closed_form() {
        // g = diag(r², (R + r cosθ)²) gives
        //   Γ^θ_{φφ} = (R + r cosθ) sinθ / r,
        //   Γ^φ_{θφ} = −r sinθ / (R + r cosθ).
        let m = EmbeddedManifold::torus3();
        let (big_r, small_r) = (2.0, 0.5);
        for theta in [0.7, 2.0, 4.5] {
            let ch = m.christoffel(&ChartPoint::new(vec![theta, 0.3])).unwrap();
            let ring = big_r + small_r * theta.cos();
            assert_close(ch.gamma[[0, 1, 1]], ring * theta.sin() / small_r, 1e-5);
            assert_close(ch.gamma[[1, 0, 1]], -small_r * theta.sin() / ring, 1e-6);
        }
    }

    #[test]
    fn christoffel_lower_index_symmetry() {
        let m = EmbeddedManifold::torus3();
        let ch = m.christoffel(&ChartPoint::new(vec![1.3, 2.9])).unwrap();
        let d = ch.dim();
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    assert_close(ch.gamma[[k, i, j]], ch.gamma[[k, j, i]], 1e-8);
                }
            }
        }
    }

    #[test]
    fn volume_of_circle_is_circumference() {
        let m = EmbeddedManifold::circle();
        let v = m.volume(m.chart_domain(), 10_000).unwrap();
        assert_close(v, TAU, 1e-3);
    }

    #[test]
    fn volume_of_sphere_is_4pi() {
        let m = EmbeddedManifold::sphere();
        let v = m.volume(m.chart_domain(), 512).unwrap();
        assert_close(v, 4.0 * PI, 1e-2);
    }

    #[test]
    fn volume_of_torus3_matches_closed_form() {
        // Surface area of a torus: 4π² R r.
        let m = EmbeddedManifold::torus3();
        let v = m.volume(m.chart_domain(), 512).unwrap();
        assert_close(v, 4.0 * PI * PI * 2.0 * 0.5, 1e-3);
    }

    #[test]
    fn volume_of_empty_region_is_zero() {
        let m = EmbeddedManifold::sphere();
        let region = BoxRegion::new(vec![Interval::new(1.0, 1.0), Interval::new(0.0, 2.0)]);
        assert_eq!(m.volume(&region, 64).unwrap(), 0.0);
    }

    #[test]
    fn volume_rejects_escaping_region() {
        let m = EmbeddedManifold::circle();
        let region = BoxRegion::new(vec![Interval::new(-1.0, 1.0)]);
        assert!(m.volume(&region, 64).is_err());
    }

    #[test]
    fn volume_is_additive_on_aligned_split() {
        let m = EmbeddedManifold::sphere();
        let dom = m.chart_domain();
        let mid = dom.intervals[0].midpoint();
        let whole = m.volume(dom, 1024).unwrap();
        let left = m
            .volume(
                &BoxRegion::new(vec![
                    Interval::new(dom.intervals[0].lo, mid),
                    dom.intervals[1],
                ]),
                512,
            )
            .unwrap();
        let right = m
            .volume(
                &BoxRegion::new(vec![
                    Interval::new(mid, dom.intervals[0].hi),
                    dom.intervals[1],
                ]),
                512,
            )
            .unwrap();
        // Splitting at the shared grid line reproduces the same cell centers
        // on the left-right axis; the cross axis keeps its resolution, so the
        // only difference is summation order.
        assert_close((left + right - whole).abs() / whole, 0.0, 1e-6);
    }

    #[test]
    fn analytic_exp_circle_is_angle_addition() {
        let m = EmbeddedManifold::circle();
        let out = m.analytic_exp(&ChartPoint::new(vec![0.0]), &[PI]).unwrap();
        assert_close(out.coords[0], -1.0, 1e-14);
        assert_close(out.coords[1], 0.0, 1e-14);
    }

    #[test]
    fn analytic_exp_sphere_quarter_turn() {
        let m = EmbeddedManifold::sphere();
        // From the equator point (1,0,0), velocity along −θ (towards the
        // north pole) with speed π/2 lands on (0,0,1).
        let out = m
            .analytic_exp(&ChartPoint::new(vec![PI / 2.0, 0.0]), &[-PI / 2.0, 0.0])
            .unwrap();
        assert_close(out.coords[0], 0.0, 1e-14);
        assert_close(out.coords[1], 0.0, 1e-14);
        assert_close(out.coords[2], 1.0, 1e-14);
    }

    #[test]
    fn chart_inverse_round_trips() {
        for m in [
            EmbeddedManifold::circle(),
            EmbeddedManifold::sphere(),
            EmbeddedManifold::clifford_torus(),
            EmbeddedManifold::torus3(),
        ] {
            for p in m.sample_area_uniform(100, 99) {
                let a = m.embed(&p).unwrap();
                let q = m.chart_inverse(&a).unwrap();
                let b = AmbientPoint::new(m.embed_unchecked(&q.coords));
                assert!(a.distance(&b) < 1e-10, "round trip failed on {}", m.id());
            }
        }
    }

    #[test]
    fn wrap_periodic_canonicalizes() {
        let m = EmbeddedManifold::clifford_torus();
        let mut c = [TAU + 0.5, -0.25];
        m.wrap_periodic(&mut c);
        assert_close(c[0], 0.5, 1e-12);
        assert_close(c[1], TAU - 0.25, 1e-12);
    }

    #[test]
    fn samples_stay_in_domain_and_are_deterministic() {
        let m = EmbeddedManifold::sphere();
        let a = m.sample_area_uniform(500, 7);
        let b = m.sample_area_uniform(500, 7);
        assert_eq!(a, b);
        for p in &a {
            assert!(m.contains(p).is_ok());
        }
        let c = m.sample_area_uniform_iid(500, 7);
        let d = m.sample_area_uniform_iid(500, 7);
        assert_eq!(c, d);
        for p in &c {
            assert!(m.contains(p).is_ok());
        }
    }

    #[test]
    fn sphere_sampling_follows_area_measure() {
        // The band θ ∈ [π/3, 2π/3] holds half the sphere's area; both
        // samplers should put about half their points there.
        let m = EmbeddedManifold::sphere();
        let check = |pts: &[ChartPoint], tol: f64| {
            let inside = pts
                .iter()
                .filter(|p| p.coords[0] >= PI / 3.0 && p.coords[0] <= 2.0 * PI / 3.0)
                .count() as f64;
            let frac = inside / pts.len() as f64;
            assert!((frac - 0.5).abs() < tol, "band fraction {frac}");
        };
        check(&m.sample_area_uniform(4000, 3), 0.01);
        check(&m.sample_area_uniform_iid(4000, 3), 0.05);
    }

    #[test]
    fn from_id_knows_the_catalog() {
        for id in ["circle", "sphere", "clifford-torus", "torus3"] {
            assert_eq!(EmbeddedManifold::from_id(id).unwrap().id(), id);
        }
        assert!(EmbeddedManifold::from_id("klein-bottle").is_err());
    }
}
