//! Hausdorff and directed distances between finite point clouds.
//!
//! The directed distance is max over x ∈ X of min over y ∈ Y of ‖x − y‖₂;
//! the Hausdorff distance is the larger of the two directions. Both the
//! accelerated path and the brute-force oracle compare the same per-pair
//! squared distances and only take a square root at the very end, so the two
//! paths return bit-identical results: acceleration changes which pairs are
//! *visited*, never the value of any comparison.
//!
//! The accelerated path buckets the reference cloud on a uniform grid over
//! its first min(dim, 3) coordinates, cell size equal to the median
//! nearest-neighbor spacing. A query expands Chebyshev rings of cells
//! around the query point; once the ring's distance lower bound exceeds the
//! best squared distance found, the minimum is exact. A query may also stop
//! as soon as its running minimum drops to the current directed maximum:
//! such a point can no longer raise the maximum, which is the only quantity
//! reported.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::manifold::AmbientPoint;

/// Finite list of ambient points of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    dim: usize,
    label: Option<String>,
}

impl PointCloud {
    /// Builds a cloud from rows; every coordinate must be finite.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("point cloud must be nonempty".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("points must have at least one coordinate".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite coordinate {v} in row {i}"
                    )));
                }
                data.push(v);
            }
        }
        Ok(PointCloud { data, dim, label: None })
    }

    pub fn from_ambient(points: &[AmbientPoint]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| p.coords.clone()).collect();
        Self::from_rows(&rows)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Serializes to CSV: a `#` header carrying dimension and label, then one
    /// comma-separated row per point. f64 values print in shortest
    /// round-trip form, so read-back is bit-exact.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        match &self.label {
            Some(l) => writeln!(out, "# dim={} label={l}", self.dim).expect("string write"),
            None => writeln!(out, "# dim={}", self.dim).expect("string write"),
        }
        for row in self.rows() {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("string write");
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Malformed {
            what: "point-cloud CSV",
            detail: "empty file".into(),
        })?;
        if !header.starts_with('#') {
            return Err(Error::Malformed {
                what: "point-cloud CSV",
                detail: "missing '#' header line".into(),
            });
        }
        let mut dim: Option<usize> = None;
        let mut label: Option<String> = None;
        let body = header.trim_start_matches('#').trim();
        if let Some(rest) = body.strip_prefix("dim=") {
            let (dim_str, tail) = match rest.split_once(' ') {
                Some((d, t)) => (d, Some(t)),
                None => (rest, None),
            };
            dim = dim_str.parse::<usize>().ok();
            if let Some(tail) = tail {
                if let Some(l) = tail.trim().strip_prefix("label=") {
                    label = Some(l.to_string());
                }
            }
        }
        let dim = dim.ok_or(Error::Malformed {
            what: "point-cloud CSV",
            detail: format!("header {header:?} lacks dim=<n>"),
        })?;
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(dim);
            for tok in line.split(',') {
                let v: f64 = tok.trim().parse().map_err(|_| Error::Malformed {
                    what: "point-cloud CSV",
                    detail: format!("bad number {tok:?} on data line {}", lineno + 1),
                })?;
                row.push(v);
            }
            if row.len() != dim {
                return Err(Error::Malformed {
                    what: "point-cloud CSV",
                    detail: format!(
                        "data line {} has {} columns, header says {dim}",
                        lineno + 1,
                        row.len()
                    ),
                });
            }
            rows.push(row);
        }
        let cloud = Self::from_rows(&rows)?;
        Ok(match label {
            Some(l) => cloud.with_label(l),
            None => cloud,
        })
    }
}

/// Shared per-pair kernel. Every code path that compares two points goes
/// through this exact summation order.
#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

fn check_pair(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!(
            "clouds have ambient dimensions {} and {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// Uniform bucket grid over the first min(dim, 3) coordinates of a cloud.
struct GridIndex<'a> {
    cloud: &'a PointCloud,
    proj: usize,
    lo: Vec<f64>,
    counts: Vec<usize>,
    cell: Vec<f64>,
    min_cell: f64,
    strides: Vec<usize>,
    offsets: Vec<usize>,
    ids: Vec<usize>,
}

enum QueryMin {
    /// The exact minimum squared distance to the cloud.
    Exact(f64),
    /// Search stopped early; the true minimum is ≤ the abort threshold.
    AtMost,
}

impl<'a> GridIndex<'a> {
    fn build(cloud: &'a PointCloud, target_cell: f64) -> Self {
        let proj = cloud.dim().min(3);
        let n = cloud.len();
        let mut lo = vec![f64::INFINITY; proj];
        let mut hi = vec![f64::NEG_INFINITY; proj];
        for row in cloud.rows() {
            for a in 0..proj {
                lo[a] = lo[a].min(row[a]);
                hi[a] = hi[a].max(row[a]);
            }
        }
        let mut counts = vec![1usize; proj];
        if target_cell > 0.0 {
            for a in 0..proj {
                let span = hi[a] - lo[a];
                counts[a] = ((span / target_cell).ceil() as usize).clamp(1, 128);
            }
        }
        // Keep the table near linear in the cloud size.
        loop {
            let total: usize = counts.iter().product();
            if total <= 8 * n + 64 {
                break;
            }
            let widest = (0..proj).max_by_key(|&a| counts[a]).expect("proj ≥ 1");
            counts[widest] = (counts[widest] / 2).max(1);
        }
        let cell: Vec<f64> = (0..proj)
            .map(|a| {
                let span = hi[a] - lo[a];
                if span > 0.0 {
                    span / counts[a] as f64
                } else {
                    1.0
                }
            })
            .collect();
        let min_cell = cell.iter().fold(f64::INFINITY, |m, &c| m.min(c));
        let mut strides = vec![1usize; proj];
        for a in 1..proj {
            strides[a] = strides[a - 1] * counts[a - 1];
        }
        let total: usize = counts.iter().product();

        let cell_of = |row: &[f64]| -> usize {
            let mut id = 0;
            for a in 0..proj {
                let mut c = ((row[a] - lo[a]) / cell[a]) as usize;
                if c >= counts[a] {
                    c = counts[a] - 1;
                }
                id += c * strides[a];
            }
            id
        };

        // Counting sort by cell id keeps insertion order within a cell.
        let mut offsets = vec![0usize; total + 1];
        for row in cloud.rows() {
            offsets[cell_of(row) + 1] += 1;
        }
        for i in 0..total {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut ids = vec![0usize; n];
        for (i, row) in cloud.rows().enumerate() {
            let c = cell_of(row);
            ids[cursor[c]] = i;
            cursor[c] += 1;
        }

        GridIndex {
            cloud,
            proj,
            lo,
            counts,
            cell,
            min_cell,
            strides,
            offsets,
            ids,
        }
    }

    fn cell_coords_clamped(&self, q: &[f64]) -> Vec<usize> {
        (0..self.proj)
            .map(|a| {
                let x = q[a];
                if x <= self.lo[a] {
                    0
                } else {
                    let c = ((x - self.lo[a]) / self.cell[a]) as usize;
                    c.min(self.counts[a] - 1)
                }
            })
            .collect()
    }

    /// Minimum squared distance from `q` to the cloud.
    ///
    /// `abort_le`: once the running minimum is ≤ this value the query stops
    /// early (the caller only needs values above it). `skip` excludes one
    /// point id, for self-queries.
    fn query_min2(&self, q: &[f64], abort_le: f64, skip: Option<usize>) -> QueryMin {
        let center = self.cell_coords_clamped(q);
        let max_r = (0..self.proj)
            .map(|a| center[a].max(self.counts[a] - 1 - center[a]))
            .max()
            .expect("proj ≥ 1");
        let mut best = f64::INFINITY;
        let mut cursor_lo = vec![0usize; self.proj];
        let mut cursor_hi = vec![0usize; self.proj];
        for r in 0..=max_r {
            // Points in cells at Chebyshev distance ≥ r are at least
            // (r − 1)·min_cell away in the projected coordinates, hence in
            // the full space: stop once that bound can't beat `best`.
            if r >= 1 {
                let lb = (r - 1) as f64 * self.min_cell;
                if lb * lb >= best {
                    return QueryMin::Exact(best);
                }
            }
            for a in 0..self.proj {
                cursor_lo[a] = center[a].saturating_sub(r);
                cursor_hi[a] = (center[a] + r).min(self.counts[a] - 1);
            }
            let mut idx = cursor_lo.clone();
            'cells: loop {
                // Only the shell at exactly Chebyshev distance r is new.
                let chebyshev = (0..self.proj)
                    .map(|a| idx[a].abs_diff(center[a]))
                    .max()
                    .expect("proj ≥ 1");
                if chebyshev == r {
                    let cell_id: usize =
                        (0..self.proj).map(|a| idx[a] * self.strides[a]).sum();
                    for slot in self.offsets[cell_id]..self.offsets[cell_id + 1] {
                        let id = self.ids[slot];
                        if skip == Some(id) {
                            continue;
                        }
                        let d2 = dist2(q, self.cloud.row(id));
                        if d2 < best {
                            best = d2;
                            if best <= abort_le {
                                return QueryMin::AtMost;
                            }
                        }
                    }
                }
                let mut a = 0;
                loop {
                    if a == self.proj {
                        break 'cells;
                    }
                    idx[a] += 1;
                    if idx[a] <= cursor_hi[a] {
                        break;
                    }
                    idx[a] = cursor_lo[a];
                    a += 1;
                }
            }
        }
        QueryMin::Exact(best)
    }
}

/// Exact nearest-neighbor squared distances within a cloud (self excluded).
fn nn_squared_distances(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    // Provisional cell size from the bounding box, enough to make the exact
    // NN pass fast; the value does not affect results.
    let proj = cloud.dim().min(3);
    let mut lo = vec![f64::INFINITY; proj];
    let mut hi = vec![f64::NEG_INFINITY; proj];
    for row in cloud.rows() {
        for a in 0..proj {
            lo[a] = lo[a].min(row[a]);
            hi[a] = hi[a].max(row[a]);
        }
    }
    let volume: f64 = (0..proj).map(|a| (hi[a] - lo[a]).max(1e-12)).product();
    let provisional = (volume / n as f64).powf(1.0 / proj as f64);
    let index = GridIndex::build(cloud, provisional);
    (0..n)
        .map(|i| match index.query_min2(cloud.row(i), -1.0, Some(i)) {
            QueryMin::Exact(d2) => d2,
            QueryMin::AtMost => unreachable!("abort threshold below zero never triggers"),
        })
        .collect()
}

/// Median nearest-neighbor spacing; the accelerated index's cell size.
fn median_nn_spacing(cloud: &PointCloud) -> f64 {
    if cloud.len() < 2 {
        return 0.0;
    }
    let mut d2s = nn_squared_distances(cloud);
    d2s.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    d2s[d2s.len() / 2].sqrt()
}

/// Largest nearest-neighbor gap within a cloud: how fine the cloud is as a
/// net of whatever it samples.
pub fn net_fineness(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::InvalidArgument(
            "net fineness needs at least two points".into(),
        ));
    }
    let d2s = nn_squared_distances(cloud);
    Ok(d2s.iter().fold(0.0f64, |m, &d| m.max(d)).sqrt())
}

/// Directed squared distance via the grid index.
fn directed2_indexed(x: &PointCloud, y: &PointCloud) -> f64 {
    let index = GridIndex::build(y, median_nn_spacing(y));
    let mut max2 = 0.0f64;
    for row in x.rows() {
        match index.query_min2(row, max2, None) {
            QueryMin::Exact(min2) => {
                if min2 > max2 {
                    max2 = min2;
                }
            }
            // Early abandon: this point's distance cannot exceed the
            // running maximum, so it cannot change the result.
            QueryMin::AtMost => {}
        }
    }
    max2
}

/// Directed squared distance by exhaustive scan.
fn directed2_brute(x: &PointCloud, y: &PointCloud) -> f64 {
    let mut max2 = 0.0f64;
    for xr in x.rows() {
        let mut min2 = f64::INFINITY;
        for yr in y.rows() {
            let d2 = dist2(xr, yr);
            if d2 < min2 {
                min2 = d2;
            }
        }
        if min2 > max2 {
            max2 = min2;
        }
    }
    max2
}

/// Directed distance max_{x∈X} min_{y∈Y} ‖x − y‖₂, exact.
pub fn directed_hausdorff(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_pair(x, y)?;
    Ok(directed2_indexed(x, y).sqrt())
}

/// Hausdorff distance: the larger directed distance, symmetric and exact.
pub fn hausdorff(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_pair(x, y)?;
    let fwd = directed2_indexed(x, y);
    let bwd = directed2_indexed(y, x);
    Ok(fwd.max(bwd).sqrt())
}

/// Brute-force oracle for [`hausdorff`]; input sizes capped at |X|·|Y| ≤ 10⁷.
pub fn brute_force_hausdorff(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_pair(x, y)?;
    let work = x.len() as u64 * y.len() as u64;
    if work > 10_000_000 {
        return Err(Error::ResourceLimit(format!(
            "brute-force pair count {work} exceeds 10^7"
        )));
    }
    let fwd = directed2_brute(x, y);
    let bwd = directed2_brute(y, x);
    Ok(fwd.max(bwd).sqrt())
}
