//! Seed derivation and low-discrepancy sequences.
//!
//! Every randomized stage derives its own ChaCha8 stream from a master seed
//! and a stage name, so adding or reordering stages never perturbs the
//! others. Halton points drive quasi-uniform sampling where coverage, not
//! independence, is what matters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// First eight primes; Halton bases for up to eight dimensions.
const HALTON_BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Mixes a stage name into a master seed.
///
/// FNV-1a over the name, then a splitmix64 finalizer over the xor with the
/// master seed. Distinct stage names give independent streams for any fixed
/// master seed.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in stage.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 stream for a raw seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// ChaCha8 stream for a named stage under a master seed.
pub fn stage_rng(master: u64, stage: &str) -> ChaCha8Rng {
    seeded_rng(derive_seed(master, stage))
}

/// Radical inverse of `index` in the given base; the Halton coordinate.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * inv;
        index /= base;
        inv /= b;
    }
    out
}

/// Halton sequence in `dim` dimensions with a seeded Cranley–Patterson
/// rotation: every point is shifted by a fixed per-axis offset modulo 1, so
/// marginals stay uniform while the seed moves the whole lattice.
pub struct HaltonSequence {
    shifts: Vec<f64>,
    index: u64,
}

impl HaltonSequence {
    /// Shifted sequence; `dim` must be between 1 and 8.
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(
            (1..=HALTON_BASES.len()).contains(&dim),
            "Halton dimension {dim} outside 1..=8"
        );
        let mut rng = seeded_rng(seed);
        let shifts = (0..dim).map(|_| rng.random::<f64>()).collect();
        // Index starts at 1: index 0 maps to the all-zeros corner, which
        // degrades equidistribution of short prefixes.
        HaltonSequence { shifts, index: 1 }
    }

    /// Unshifted sequence (shift zero on every axis).
    pub fn unshifted(dim: usize) -> Self {
        assert!((1..=HALTON_BASES.len()).contains(&dim));
        HaltonSequence {
            shifts: vec![0.0; dim],
            index: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.shifts.len()
    }

    /// Next point in the half-open unit cube [0, 1)^dim.
    pub fn next_point(&mut self) -> Vec<f64> {
        let idx = self.index;
        self.index += 1;
        self.shifts
            .iter()
            .enumerate()
            .map(|(axis, shift)| {
                let u = radical_inverse(idx, HALTON_BASES[axis]) + shift;
                let w = u - u.floor();
                // Guard the pathological u = 1.0 - eps + shift rounding case.
                if w >= 1.0 {
                    0.0
                } else {
                    w
                }
            })
            .collect()
    }

    /// Convenience: the next `count` points.
    pub fn take_points(&mut self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.next_point()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_separates_stages() {
        let a = derive_seed(7, "sampling");
        let b = derive_seed(7, "training");
        let c = derive_seed(8, "sampling");
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, "sampling"));
    }

    #[test]
    fn radical_inverse_base2_prefix() {
        // 1 -> 0.1b, 2 -> 0.01b, 3 -> 0.11b, 4 -> 0.001b
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }

    #[test]
    fn radical_inverse_base3() {
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((radical_inverse(2, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert!((radical_inverse(3, 3) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn halton_points_in_unit_cube_and_deterministic() {
        let mut a = HaltonSequence::new(3, 41);
        let mut b = HaltonSequence::new(3, 41);
        for _ in 0..100 {
            let pa = a.next_point();
            let pb = b.next_point();
            assert_eq!(pa, pb);
            for x in pa {
                assert!((0.0..1.0).contains(&x));
            }
        }
    }

    #[test]
    fn halton_equidistributes_dyadic_prefix() {
        // The first 2^k unshifted base-2 values fill the dyadic grid exactly,
        // so each half of [0,1) receives exactly half the points.
        let mut seq = HaltonSequence::unshifted(1);
        let pts = seq.take_points(1024);
        let left = pts.iter().filter(|p| p[0] < 0.5).count();
        assert_eq!(left, 512);
    }

    #[test]
    fn shifted_sequences_differ_by_seed() {
        let mut a = HaltonSequence::new(2, 1);
        let mut b = HaltonSequence::new(2, 2);
        assert_ne!(a.next_point(), b.next_point());
    }
}
