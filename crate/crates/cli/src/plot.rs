//! Hand-rolled SVG scatter plots.
//!
//! Plots are flat 2-d scatters. Points in three or more dimensions go
//! through a fixed orthographic projection of their first three
//! coordinates, so the same cloud always lands in the same place.

use crate::CliError;
use geogen::PointCloud;
use std::fmt::Write as _;
use std::path::Path;

pub struct Series<'a> {
    pub label: &'a str,
    pub cloud: &'a PointCloud,
    pub color: &'a str,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 720.0;
const MARGIN: f64 = 56.0;

/// Series larger than this are strided down before plotting; the file
/// stays small and the scatter is indistinguishable at screen density.
const MAX_POINTS_PER_SERIES: usize = 4096;

/// Orthographic projection along (1, 1, 1) for 3-d points; dimensions
/// above three contribute only their first three coordinates.
fn project(p: &[f64]) -> (f64, f64) {
    match p.len() {
        0 => (0.0, 0.0),
        1 => (p[0], 0.0),
        2 => (p[0], p[1]),
        _ => {
            let (x, y, z) = (p[0], p[1], p[2]);
            ((x - y) / 2f64.sqrt(), (x + y - 2.0 * z) / 6f64.sqrt())
        }
    }
}

pub fn scatter_svg(path: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    let mut projected: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for s in series {
        let stride = (s.cloud.len() / MAX_POINTS_PER_SERIES).max(1);
        let pts = s
            .cloud
            .rows()
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(_, row)| project(row))
            .collect();
        projected.push(pts);
    }

    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for pts in &projected {
        for &(x, y) in pts {
            lo.0 = lo.0.min(x);
            lo.1 = lo.1.min(y);
            hi.0 = hi.0.max(x);
            hi.1 = hi.1.max(y);
        }
    }
    if !lo.0.is_finite() {
        lo = (-1.0, -1.0);
        hi = (1.0, 1.0);
    }
    // Degenerate extents still deserve a nonzero viewport.
    let span_x = (hi.0 - lo.0).max(1e-9);
    let span_y = (hi.1 - lo.1).max(1e-9);
    let scale = ((WIDTH - 2.0 * MARGIN) / span_x).min((HEIGHT - 2.0 * MARGIN) / span_y);
    let cx = 0.5 * (lo.0 + hi.0);
    let cy = 0.5 * (lo.1 + hi.1);
    let to_px = |x: f64, y: f64| {
        (
            WIDTH / 2.0 + (x - cx) * scale,
            // SVG y grows downward.
            HEIGHT / 2.0 - (y - cy) * scale,
        )
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#fdfdfd\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    for (idx, (s, pts)) in series.iter().zip(&projected).enumerate() {
        let ly = 50.0 + 18.0 * idx as f64;
        let _ = writeln!(svg, "<circle cx=\"20\" cy=\"{ly}\" r=\"4\" fill=\"{}\"/>", s.color);
        let _ = writeln!(
            svg,
            "<text x=\"30\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{} \
             ({} points)</text>",
            ly + 4.0,
            escape(s.label),
            s.cloud.len()
        );
        let _ = writeln!(svg, "<g fill=\"{}\" fill-opacity=\"0.65\">", s.color);
        for &(x, y) in pts {
            let (px, py) = to_px(x, y);
            let _ = writeln!(svg, "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2\"/>");
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");

    std::fs::write(path, svg).map_err(CliError::Io)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
