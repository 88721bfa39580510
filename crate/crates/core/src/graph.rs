//! Adaptive-neighbor affinity graphs.
//!
//! Each sample `i` spreads a unit of affinity over its `k` nearest other
//! samples. The weights solve
//!
//! ```text
//! min_{s_i}  sum_j (beta/2) f_ij s_ij + gamma_i s_ij^2
//! s.t.       s_i^T 1 = 1,  0 <= s_ij <= 1
//! ```
//!
//! with `f_ij = ||z_i - z_j||^2`. Choosing `gamma_i` as the largest value that
//! keeps the solution `k`-sparse gives the closed form
//!
//! ```text
//! s_ij    = (f_(k+1) - f_(j)) / (k f_(k+1) - sum_{r<=k} f_(r))   for the k nearest
//! gamma_i = beta/4 * (k f_(k+1) - sum_{r<=k} f_(r))
//! ```
//!
//! where `f_(r)` is the r-th smallest distance. Self-affinity is excluded.

use log::warn;
use rayon::prelude::*;

use crate::{Matrix, Result, RgcError};

/// Row sums must match 1 this closely.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Stand-in gap used for `gamma_i` when the first `k+1` distances coincide.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// Squared distances from one sample to every other sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    /// Index of the sample this profile belongs to.
    pub sample: usize,
    /// `(other sample, squared distance)`; the sample itself is absent.
    pub entries: Vec<(usize, f64)>,
}

impl DistanceProfile {
    /// Profile over neighbors `0..f.len()`, handy for fixtures.
    pub fn from_distances(sample: usize, f: &[f64]) -> Self {
        DistanceProfile {
            sample,
            entries: f.iter().copied().enumerate().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Squared Euclidean distances between the columns of `z`.
pub fn pairwise_sq_dists(z: &Matrix) -> Result<Vec<DistanceProfile>> {
    let n = z.ncols();
    if n < 2 {
        return Err(RgcError::InvalidInput(format!(
            "distance profiles need at least 2 samples, got {n}"
        )));
    }
    let profiles = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.column(i);
            let entries = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = zi
                        .iter()
                        .zip(z.column(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (j, d)
                })
                .collect();
            DistanceProfile { sample: i, entries }
        })
        .collect();
    Ok(profiles)
}

/// Output of one closed-form row update.
#[derive(Debug, Clone, PartialEq)]
pub struct RowUpdate {
    /// Positive weights only, sorted by neighbor index.
    pub weights: Vec<(usize, f64)>,
    pub gamma: f64,
}

/// Ascending by distance, ties by neighbor index.
fn sorted_neighbors(profile: &DistanceProfile) -> Vec<(usize, f64)> {
    let mut sorted = profile.entries.clone();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    sorted
}

fn check_k(profile: &DistanceProfile, k: usize) -> Result<()> {
    if k == 0 || k >= profile.len() {
        return Err(RgcError::InvalidInput(format!(
            "neighbor count k = {k} outside [1, {}] for a profile of {} distances",
            profile.len().saturating_sub(1),
            profile.len()
        )));
    }
    if let Some(&(j, d)) = profile
        .entries
        .iter()
        .find(|e| !e.1.is_finite() || e.1 < 0.0)
    {
        return Err(RgcError::InvalidInput(format!(
            "distance to sample {j} is {d}, expected a finite nonnegative value"
        )));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(RgcError::InvalidInput(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    Ok(())
}

/// Gap terms `f_(k+1) - f_(j)` for the k nearest and their sum.
fn gaps(sorted: &[(usize, f64)], k: usize) -> (Vec<f64>, f64) {
    let cutoff = sorted[k].1;
    let gaps: Vec<f64> = sorted[..k].iter().map(|&(_, f)| cutoff - f).collect();
    let total = gaps.iter().sum();
    (gaps, total)
}

fn gamma_from_gap(total: f64, beta: f64) -> f64 {
    let gap = if total > 0.0 { total } else { DEGENERATE_GAP };
    beta / 4.0 * gap
}

/// Closed-form simplex row update on one distance profile.
///
/// Requires `1 <= k <= profile.len() - 1` so that the `(k+1)`-th distance
/// exists. When the first `k+1` distances are all equal the row falls back to
/// uniform weight `1/k` and `gamma_i = beta/4 * 1e-12`.
pub fn update_row(profile: &DistanceProfile, k: usize, beta: f64) -> Result<RowUpdate> {
    check_k(profile, k)?;
    check_beta(beta)?;
    let sorted = sorted_neighbors(profile);
    let (gaps, total) = gaps(&sorted, k);

    let mut weights: Vec<(usize, f64)> = if total > 0.0 {
        sorted[..k]
            .iter()
            .zip(&gaps)
            .filter(|(_, &g)| g > 0.0)
            .map(|(&(j, _), &g)| (j, g / total))
            .collect()
    } else {
        sorted[..k]
            .iter()
            .map(|&(j, _)| (j, 1.0 / k as f64))
            .collect()
    };
    weights.sort_by_key(|&(j, _)| j);

    Ok(RowUpdate {
        weights,
        gamma: gamma_from_gap(total, beta),
    })
}

/// Mean of the per-row `gamma_i` over all profiles.
pub fn average_gamma(profiles: &[DistanceProfile], k: usize, beta: f64) -> Result<f64> {
    if profiles.is_empty() {
        return Err(RgcError::InvalidInput("no distance profiles".into()));
    }
    check_beta(beta)?;
    let mut sum = 0.0;
    for p in profiles {
        check_k(p, k)?;
        let (_, total) = gaps(&sorted_neighbors(p), k);
        sum += gamma_from_gap(total, beta);
    }
    Ok(sum / profiles.len() as f64)
}

/// Clamps `k` to `n - 2` (the largest value with a `(k+1)`-th neighbor).
pub fn effective_k(k: usize, n: usize) -> usize {
    let max_k = n.saturating_sub(2).max(1);
    if k > max_k {
        warn!("k = {k} exceeds n - 2 = {max_k} for n = {n}; clamping");
        max_k
    } else {
        k
    }
}

/// Learns the affinity graph on the columns of `z`.
///
/// Returns the graph together with the averaged `gamma`.
pub fn learn_graph(z: &Matrix, k: usize, beta: f64) -> Result<(AffinityGraph, f64)> {
    let n = z.ncols();
    if n < 3 {
        return Err(RgcError::InvalidInput(format!(
            "adaptive neighbors need at least 3 samples, got {n}"
        )));
    }
    let k = effective_k(k, n);
    let profiles = pairwise_sq_dists(z)?;
    let updates: Vec<RowUpdate> = profiles
        .par_iter()
        .map(|p| update_row(p, k, beta))
        .collect::<Result<_>>()?;
    let gamma = updates.iter().map(|u| u.gamma).sum::<f64>() / n as f64;
    let rows = updates.into_iter().map(|u| u.weights).collect();
    Ok((AffinityGraph { n, rows }, gamma))
}

/// Row-stochastic sparse affinity matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl AffinityGraph {
    /// Builds a graph from per-row `(column, weight)` lists and checks the
    /// simplex constraints. Zero weights are dropped.
    pub fn new(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(RgcError::InvalidInput(format!(
                "graph declares {n} samples but has {} rows",
                rows.len()
            )));
        }
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.retain(|&(_, w)| w != 0.0);
                r.sort_by_key(|&(j, _)| j);
                r
            })
            .collect();
        let g = AffinityGraph { n, rows };
        g.validate(None)?;
        Ok(g)
    }

    /// Graph from a dense `n x n` matrix.
    pub fn from_dense(s: &Matrix) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(RgcError::InvalidInput(format!(
                "affinity matrix must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let n = s.nrows();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| s[(i, j)] != 0.0)
                    .map(|j| (j, s[(i, j)]))
                    .collect()
            })
            .collect();
        Self::new(n, rows)
    }

    /// Checks weights in `[0, 1]`, unit row sums, no self-loops, and
    /// optionally at most `k` nonzeros per row.
    pub fn validate(&self, k: Option<usize>) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let mut sum = 0.0;
            for &(j, w) in row {
                if j >= self.n {
                    return Err(RgcError::InvalidInput(format!(
                        "row {i} references column {j} >= n = {}",
                        self.n
                    )));
                }
                if j == i {
                    return Err(RgcError::InvalidInput(format!("row {i} has a self-loop")));
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(RgcError::InvalidInput(format!(
                        "weight s[{i},{j}] = {w} outside [0, 1]"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(RgcError::InvalidInput(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
            if let Some(k) = k {
                if row.len() > k {
                    return Err(RgcError::InvalidInput(format!(
                        "row {i} has {} nonzeros, more than k = {k}",
                        row.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn max_row_nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut s = Matrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                s[(i, j)] = w;
            }
        }
        s
    }

    /// `||S||_F^2`
    pub fn frobenius_sq(&self) -> f64 {
        self.rows.iter().flatten().map(|&(_, w)| w * w).sum()
    }
}

/// `L = Deg - (S + S^T)/2` with `deg_ii = sum_j (s_ij + s_ji)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacian {
    matrix: Matrix,
    degrees: Vec<f64>,
}

impl GraphLaplacian {
    /// The all-zero Laplacian on `n` nodes (no coupling at all).
    pub fn zeros(n: usize) -> Self {
        GraphLaplacian {
            matrix: Matrix::zeros(n, n),
            degrees: vec![0.0; n],
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&x| x == 0.0)
    }

    /// `Tr(Z L Z^T)`
    pub fn smoothness(&self, z: &Matrix) -> f64 {
        (z * &self.matrix).component_mul(z).sum()
    }
}

pub fn laplacian(s: &AffinityGraph) -> GraphLaplacian {
    let n = s.n();
    let mut w = Matrix::zeros(n, n);
    for (i, row) in s.rows().iter().enumerate() {
        for &(j, v) in row {
            w[(i, j)] += 0.5 * v;
            w[(j, i)] += 0.5 * v;
        }
    }
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let mut matrix = -w;
    for (i, &d) in degrees.iter().enumerate() {
        matrix[(i, i)] += d;
    }
    GraphLaplacian { matrix, degrees }
}
