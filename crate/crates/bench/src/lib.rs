//! Shared input builders for the criterion benches.

use geogen::rng::seeded_rng;
use geogen::PointCloud;
use rand::Rng;

/// Uniform cloud in [-1, 1]^dim, reproducible from the seed.
pub fn uniform_cloud(len: usize, dim: usize, seed: u64) -> PointCloud {
    let mut rng = seeded_rng(seed);
    let rows: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
        .collect();
    PointCloud::from_rows(&rows).expect("cloud construction")
}
