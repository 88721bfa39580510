//! Local and global consistency label propagation.

use super::{PartialLabels, SoftLabels};
use crate::graph::{laplacian, AffinityGraph, GraphLaplacian};
use crate::prox::solve_spd;
use crate::{Matrix, Result, RgcError};

/// Minimizes `Tr(F^T L F) + lambda ||F - Y||_F^2`, i.e.
/// `F = lambda (L + lambda I)^{-1} Y`.
pub fn lgc_propagate(
    s: &AffinityGraph,
    partial: &PartialLabels,
    lambda: f64,
) -> Result<SoftLabels> {
    propagate_with_laplacian(&laplacian(s), partial, lambda)
}

/// Same as [`lgc_propagate`] on an explicit Laplacian.
pub fn propagate_with_laplacian(
    l: &GraphLaplacian,
    partial: &PartialLabels,
    lambda: f64,
) -> Result<SoftLabels> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(RgcError::InvalidInput(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let n = l.n();
    if partial.len() != n {
        return Err(RgcError::InvalidInput(format!(
            "{} labels for a graph on {n} samples",
            partial.len()
        )));
    }
    if partial.labeled_count() == 0 {
        return Err(RgcError::InvalidInput("no labeled samples".into()));
    }
    let a = l.matrix() + Matrix::identity(n, n) * lambda;
    let y = partial.indicator();
    // A symmetric: F^T A = lambda Y^T.
    let ft = solve_spd(&a, &(y.transpose() * lambda))?;
    Ok(SoftLabels {
        scores: ft.transpose(),
    })
}
