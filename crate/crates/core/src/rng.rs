//! Seeded random streams.
//!
//! All randomness comes from ChaCha8, a counter-based generator. A base
//! seed selects the key and the trial index selects the stream, so every
//! trial's draws are fixed by `(seed, index)` regardless of how trials are
//! scheduled across threads. Results are reproducible within this
//! implementation only.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under base `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, for APIs that take a plain `u64`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    trial_rng(seed, index).random()
}

/// `rows × cols` matrix of independent standard normals, filled row by row.
pub fn standard_normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}
