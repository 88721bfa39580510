//! Robust graph construction.
//!
//! A noisy data matrix `X` (features × samples) is split into a low-rank part
//! `D` and a sparse part `E` while an adaptive-neighbor affinity graph `S` is
//! learned on the cleaned samples. The learned graph feeds spectral
//! clustering and local/global-consistency label propagation; the low-rank
//! part serves data recovery (shadow removal, background extraction).
//!
//! Module map:
//!
//! - [`prox`]: singular value thresholding, soft thresholding, SPD solves.
//! - [`graph`]: distance profiles, closed-form simplex row updates, Laplacians.
//! - [`solver`]: the ADMM loop with its RPCA and fixed-graph special cases.
//! - [`learning`]: spectral clustering, k-means, label propagation, metrics.
//! - [`io`]: loaders, writers, and synthetic instance generation.

pub mod error;
pub mod graph;
pub mod io;
pub mod learning;
pub mod prox;
pub mod solver;

pub use error::{Result, RgcError};
pub use graph::{AffinityGraph, DistanceProfile, GraphLaplacian};
pub use learning::{LabelAssignment, PartialLabels, SoftLabels};
pub use solver::{ConvergenceRecord, Mode, RgcState, SolveOutcome, SolverConfig};

/// Dense real matrix. Columns are samples wherever a data matrix is meant.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Rejects matrices holding NaN or infinite entries.
pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    let bad: Vec<(usize, usize)> = (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .filter(|&(i, j)| !m[(i, j)].is_finite())
        .take(8)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(RgcError::InvalidInput(format!(
            "{what} has non-finite entries at (row, col) {bad:?}"
        )))
    }
}
