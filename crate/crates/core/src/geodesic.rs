//! Geodesic integration and the exponential map.
//!
//! The geodesic equation q̈^k = −Γ^k_{ij} q̇^i q̇^j is integrated as a first
//! order system in (q, v) with classical fixed-step RK4. Fixed steps keep
//! runs bitwise reproducible for a given configuration. Along an exact
//! geodesic the metric speed ‖v‖_g is constant; `speed_drift` measures how
//! far a computed trajectory strays from that.

use crate::error::{Error, Result};
use crate::manifold::{AmbientPoint, ChartPoint, EmbeddedManifold, TangentVector};

/// One integrator sample: position, chart velocity, time.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub position: ChartPoint,
    pub velocity: Vec<f64>,
    pub time: f64,
}

/// Full RK4 output: states at every step, uniformly spaced in time.
#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub states: Vec<GeodesicState>,
    pub step_size: f64,
}

impl GeodesicTrajectory {
    pub fn end(&self) -> &GeodesicState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Chart acceleration −Γ^k_{ij} v^i v^j at unvalidated coordinates.
fn acceleration(manifold: &EmbeddedManifold, coords: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let d = coords.len();
    let ch = manifold.christoffel_unchecked(coords)?;
    let mut acc = vec![0.0; d];
    for k in 0..d {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += ch.gamma[[k, i, j]] * v[i] * v[j];
            }
        }
        acc[k] = -s;
    }
    Ok(acc)
}

/// Integrates the geodesic with initial position `q0` and chart velocity
/// `v0` over `total_time` in `steps` RK4 steps, recording every state.
///
/// Periodic coordinates wrap after each full step; leaving the chart through
/// a non-periodic face aborts with the escape time.
pub fn integrate_geodesic(
    manifold: &EmbeddedManifold,
    q0: &ChartPoint,
    v0: &[f64],
    total_time: f64,
    steps: usize,
) -> Result<GeodesicTrajectory> {
    manifold.contains(q0)?;
    let d = manifold.intrinsic_dim();
    if v0.len() != d {
        return Err(Error::Shape(format!(
            "velocity has {} components, chart dimension is {d}",
            v0.len()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be ≥ 1".into()));
    }
    if !total_time.is_finite() || total_time < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "total_time must be finite and nonnegative, got {total_time}"
        )));
    }

    let h = total_time / steps as f64;
    let mut q = q0.coords.clone();
    let mut v = v0.to_vec();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(GeodesicState {
        position: ChartPoint::new(q.clone()),
        velocity: v.clone(),
        time: 0.0,
    });

    let mut sq = vec![0.0; d];
    let mut sv = vec![0.0; d];
    for step in 0..steps {
        // Classical RK4 on the state (q, v).
        let a1 = acceleration(manifold, &q, &v)?;
        let k1q = v.clone();

        for i in 0..d {
            sq[i] = q[i] + 0.5 * h * k1q[i];
            sv[i] = v[i] + 0.5 * h * a1[i];
        }
        let a2 = acceleration(manifold, &sq, &sv)?;
        let k2q = sv.clone();

        for i in 0..d {
            sq[i] = q[i] + 0.5 * h * k2q[i];
            sv[i] = v[i] + 0.5 * h * a2[i];
        }
        let a3 = acceleration(manifold, &sq, &sv)?;
        let k3q = sv.clone();

        for i in 0..d {
            sq[i] = q[i] + h * k3q[i];
            sv[i] = v[i] + h * a3[i];
        }
        let a4 = acceleration(manifold, &sq, &sv)?;
        let k4q = sv.clone();

        for i in 0..d {
            q[i] += h / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
            v[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        manifold.wrap_periodic(&mut q);
        let time = (step + 1) as f64 * h;
        for (axis, &x) in q.iter().enumerate() {
            if !manifold.is_periodic(axis) {
                let iv = manifold.chart_domain().intervals[axis];
                if x < iv.lo || x > iv.hi {
                    return Err(Error::ChartEscape { exit_time: time, axis });
                }
            }
        }
        states.push(GeodesicState {
            position: ChartPoint::new(q.clone()),
            velocity: v.clone(),
            time,
        });
    }

    Ok(GeodesicTrajectory { states, step_size: h })
}

/// Step count for a unit-time numeric exponential: 64 per unit of metric
/// speed, never fewer than 64.
pub fn default_exp_steps(speed: f64) -> usize {
    ((64.0 * speed).ceil() as usize).max(64)
}

/// Numeric exponential map: integrates over unit time and embeds the
/// endpoint. `steps = None` picks the speed-scaled default.
pub fn exp_map_numeric(
    manifold: &EmbeddedManifold,
    q: &ChartPoint,
    v: &[f64],
    steps: Option<usize>,
) -> Result<AmbientPoint> {
    let speed = manifold.metric(q)?.norm(v);
    let steps = steps.unwrap_or_else(|| default_exp_steps(speed));
    let trajectory = integrate_geodesic(manifold, q, v, 1.0, steps)?;
    manifold.embed(&trajectory.end().position)
}

/// Exponential map exp_q(v): the closed form when the manifold has one,
/// otherwise the numeric integrator with speed-scaled default steps.
pub fn exp_map(manifold: &EmbeddedManifold, q: &ChartPoint, v: &[f64]) -> Result<AmbientPoint> {
    manifold.contains(q)?;
    if v.len() != manifold.intrinsic_dim() {
        return Err(Error::Shape(format!(
            "tangent vector has {} components, chart dimension is {}",
            v.len(),
            manifold.intrinsic_dim()
        )));
    }
    if let Some(out) = manifold.analytic_exp(q, v) {
        return Ok(out);
    }
    exp_map_numeric(manifold, q, v, None)
}

/// Exponential map for a based tangent vector.
pub fn exp_map_tangent(manifold: &EmbeddedManifold, v: &TangentVector) -> Result<AmbientPoint> {
    exp_map(manifold, &v.base, &v.components)
}

/// Maximum deviation of the metric speed from its initial value along a
/// trajectory.
pub fn speed_drift(manifold: &EmbeddedManifold, trajectory: &GeodesicTrajectory) -> f64 {
    let speed = |s: &GeodesicState| {
        let g = manifold.metric_unchecked(&s.position.coords);
        let d = g.nrows();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += s.velocity[i] * g[[i, j]] * s.velocity[j];
            }
        }
        acc.max(0.0).sqrt()
    };
    let s0 = speed(&trajectory.states[0]);
    trajectory
        .states
        .iter()
        .map(|s| (speed(s) - s0).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::EmbeddedManifold;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn circle_geodesic_is_uniform_rotation() {
        let m = EmbeddedManifold::circle();
        let traj =
            integrate_geodesic(&m, &ChartPoint::new(vec![0.3]), &[2.0], 1.5, 300).unwrap();
        let expect = (0.3 + 2.0 * 1.5) % TAU;
        assert!((traj.end().position.coords[0] - expect).abs() < 1e-9);
        assert!(speed_drift(&m, &traj) < 1e-10);
    }

    #[test]
    fn zero_velocity_stays_put() {
        let m = EmbeddedManifold::torus3();
        let q = ChartPoint::new(vec![1.0, 2.0]);
        let traj = integrate_geodesic(&m, &q, &[0.0, 0.0], 1.0, 50).unwrap();
        for s in &traj.states {
            assert_eq!(s.position.coords, q.coords);
            assert_eq!(s.velocity, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn sphere_equator_half_turn() {
        let m = EmbeddedManifold::sphere();
        let traj = integrate_geodesic(
            &m,
            &ChartPoint::new(vec![PI / 2.0, 0.0]),
            &[0.0, 1.0],
            PI,
            2000,
        )
        .unwrap();
        let end = traj.end();
        assert!((end.position.coords[0] - PI / 2.0).abs() < 1e-8);
        assert!((end.position.coords[1] - PI).abs() < 1e-8);
        assert!(speed_drift(&m, &traj) < 1e-9);
    }

    #[test]
    fn sphere_trajectory_escapes_into_pole_band() {
        let m = EmbeddedManifold::sphere();
        let err = integrate_geodesic(
            &m,
            &ChartPoint::new(vec![0.05, 0.0]),
            &[-1.0, 0.0],
            1.0,
            1000,
        )
        .unwrap_err();
        match err {
            Error::ChartEscape { exit_time, axis } => {
                assert_eq!(axis, 0);
                assert!(
                    exit_time > 0.03 && exit_time < 0.06,
                    "exit at {exit_time}"
                );
            }
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn exp_map_circle_half_turn() {
        let m = EmbeddedManifold::circle();
        let q = ChartPoint::new(vec![0.0]);
        let out = exp_map(&m, &q, &[PI]).unwrap();
        assert!((out.coords[0] + 1.0).abs() < 1e-12);
        assert!(out.coords[1].abs() < 1e-12);
        let numeric = exp_map_numeric(&m, &q, &[PI], None).unwrap();
        assert!(out.distance(&numeric) < 1e-9);
    }

    #[test]
    fn exp_map_zero_vector_embeds_base() {
        for m in [
            EmbeddedManifold::circle(),
            EmbeddedManifold::sphere(),
            EmbeddedManifold::torus3(),
        ] {
            let q = ChartPoint::new(match m.intrinsic_dim() {
                1 => vec![0.8],
                _ => vec![0.8, 1.7],
            });
            let zero = vec![0.0; m.intrinsic_dim()];
            let out = exp_map(&m, &q, &zero).unwrap();
            let base = m.embed(&q).unwrap();
            assert!(out.distance(&base) < 1e-12);
        }
    }

    #[test]
    fn numeric_exp_matches_sphere_great_circle() {
        let m = EmbeddedManifold::sphere();
        let q = ChartPoint::new(vec![1.1, 0.7]);
        for v in [[0.6, 0.4], [-0.3, 0.9], [1.2, -0.5]] {
            let oracle = m.analytic_exp(&q, &v).unwrap();
            let numeric = exp_map_numeric(&m, &q, &v, None).unwrap();
            assert!(
                oracle.distance(&numeric) < 1e-6,
                "great-circle mismatch {}",
                oracle.distance(&numeric)
            );
        }
    }

    #[test]
    fn rk4_error_ratio_is_fourth_order() {
        // Step counts are chosen coarse enough that RK4 truncation (~4e-7)
        // dominates the ~1e-9 bias from finite-difference Christoffel
        // symbols; at very fine steps that floor hides the h^4 scaling.
        let m = EmbeddedManifold::sphere();
        let q = ChartPoint::new(vec![1.0, 0.5]);
        let v = [0.9, 1.1];
        let oracle = m.analytic_exp(&q, &v).unwrap();
        let coarse = exp_map_numeric(&m, &q, &v, Some(16)).unwrap();
        let fine = exp_map_numeric(&m, &q, &v, Some(32)).unwrap();
        let e_coarse = oracle.distance(&coarse);
        let e_fine = oracle.distance(&fine);
        let ratio = e_coarse / e_fine;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "step-halving ratio {ratio} (errors {e_coarse:.3e} / {e_fine:.3e})"
        );
    }

    #[test]
    fn exp_homogeneity_on_torus3() {
        let m = EmbeddedManifold::torus3();
        let q = ChartPoint::new(vec![0.9, 2.1]);
        let v = [0.7, 0.5];
        let steps = 512;
        let traj = integrate_geodesic(&m, &q, &v, 1.0, steps).unwrap();
        for frac in [0.25, 0.5, 0.75] {
            let idx = (frac * steps as f64) as usize;
            let along = m.embed(&traj.states[idx].position).unwrap();
            let scaled_v = [v[0] * frac, v[1] * frac];
            let direct = exp_map_numeric(&m, &q, &scaled_v, Some(idx.max(64))).unwrap();
            assert!(
                along.distance(&direct) < 1e-6,
                "homogeneity broke at t={frac}: {}",
                along.distance(&direct)
            );
        }
    }

    #[test]
    fn trajectory_times_are_uniform() {
        let m = EmbeddedManifold::circle();
        let traj =
            integrate_geodesic(&m, &ChartPoint::new(vec![0.0]), &[1.0], 2.0, 10).unwrap();
        assert_eq!(traj.states.len(), 11);
        for (i, s) in traj.states.iter().enumerate() {
            assert!((s.time - 0.2 * i as f64).abs() < 1e-15);
        }
    }
}
