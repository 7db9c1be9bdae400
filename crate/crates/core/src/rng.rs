//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed and derives independent
//! sub-streams from it with [`derive_seed`], so results never depend on
//! thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a path of tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}

pub fn gaussian_vector(rng: &mut SeededRng, n: usize, sigma: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize, sigma: f64) -> DMatrix<f64> {
    // Row-major draw order so the stream does not depend on storage layout.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    m
}

pub fn uniform_matrix(rng: &mut SeededRng, rows: usize, cols: usize, bound: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.random_range(-bound..=bound);
        }
    }
    m
}
