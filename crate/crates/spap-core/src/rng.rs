//! Seeded random number generation for fixtures and toy models.
//!
//! Backed by the ChaCha stream cipher with 8 rounds (`ChaCha8Rng`), a
//! counter-based generator whose output stream is fixed by the algorithm:
//! identical seeds produce identical streams on every platform. Normal
//! variates come from the ziggurat sampler over that stream.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::Matrix;

/// Deterministic seeded generator.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this generator was constructed with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Matrix with independent standard normal entries, filled row-major.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.standard_normal()).collect();
        Matrix::from_vec(rows, cols, data).expect("normal draws are finite")
    }
}
