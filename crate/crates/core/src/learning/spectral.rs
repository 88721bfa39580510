//! Normalized spectral clustering (Ng-Jordan-Weiss) on an affinity graph.

use nalgebra::SymmetricEigen;

use super::kmeans::{kmeans, DEFAULT_RESTARTS};
use super::LabelAssignment;
use crate::graph::AffinityGraph;
use crate::{Matrix, Result, RgcError};

/// Rows of the `c` eigenvectors of `I - Deg^{-1/2} W Deg^{-1/2}` with the
/// smallest eigenvalues, `W = (S + S^T)/2`, each row scaled to unit length.
pub fn spectral_embedding(s: &AffinityGraph, c: usize) -> Result<Matrix> {
    let n = s.n();
    if c == 0 || c > n {
        return Err(RgcError::InvalidInput(format!(
            "cannot embed {n} samples into {c} dimensions"
        )));
    }
    let dense = s.to_dense();
    let w = (&dense + dense.transpose()) * 0.5;
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = w.row(i).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut lsym = Matrix::from_fn(n, n, |i, j| -w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    for i in 0..n {
        lsym[(i, i)] += 1.0;
    }

    let eig = SymmetricEigen::try_new(lsym, f64::EPSILON, 0)
        .ok_or_else(|| RgcError::Numerical("symmetric eigendecomposition failed".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });

    let mut emb = Matrix::zeros(n, c);
    for (col, &k) in order.iter().take(c).enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let lead = v.iamax();
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        emb.set_column(col, &v);
    }
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(emb)
}

pub fn spectral_cluster(s: &AffinityGraph, c: usize, seed: u64) -> Result<LabelAssignment> {
    let emb = spectral_embedding(s, c)?;
    Ok(kmeans(&emb, c, seed, DEFAULT_RESTARTS)?.assignment)
}
