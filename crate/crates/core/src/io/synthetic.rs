//! Low-rank plus sparse test instances with known ground truth.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Matrix, Result, RgcError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    /// Fraction of corrupted entries.
    pub sparsity: f64,
    /// Corruptions are uniform in `[-magnitude, magnitude]`.
    pub magnitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub x: Matrix,
    /// Low-rank ground truth.
    pub d: Matrix,
    /// Sparse ground truth.
    pub e: Matrix,
}

impl SyntheticSpec {
    /// Number of corrupted entries, `round(sparsity * m * n)`.
    pub fn corrupted(&self) -> usize {
        (self.sparsity * (self.m * self.n) as f64).round() as usize
    }
}

/// `D* = A B^T` with standard normal `A` (m x rank) and `B` (n x rank);
/// `E*` has exactly [`SyntheticSpec::corrupted`] nonzeros at uniformly drawn
/// positions; `X = D* + E*`.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    let SyntheticSpec {
        m,
        n,
        rank,
        sparsity,
        magnitude,
        seed,
    } = *spec;
    if m == 0 || n == 0 || rank > m.min(n) {
        return Err(RgcError::InvalidInput(format!(
            "rank {rank} impossible for a {m}x{n} matrix"
        )));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(RgcError::InvalidInput(format!(
            "sparsity {sparsity} outside [0, 1]"
        )));
    }
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(RgcError::InvalidInput(format!(
            "bad corruption magnitude {magnitude}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::from_fn(m, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = Matrix::from_fn(n, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let d = &a * b.transpose();

    let mut e = Matrix::zeros(m, n);
    for idx in sample(&mut rng, m * n, spec.corrupted()).into_vec() {
        // Column-major position.
        let (i, j) = (idx % m, idx / m);
        e[(i, j)] = if magnitude > 0.0 {
            rng.random_range(-magnitude..=magnitude)
        } else {
            0.0
        };
    }
    Ok(SyntheticInstance { x: &d + &e, d, e })
}
