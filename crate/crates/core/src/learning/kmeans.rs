//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::LabelAssignment;
use crate::{Matrix, Result, RgcError};

pub const DEFAULT_RESTARTS: usize = 20;

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: LabelAssignment,
    /// Within-cluster sum of squares.
    pub inertia: f64,
    /// `c x d`
    pub centroids: Matrix,
}

fn sq_dist(points: &Matrix, i: usize, centroids: &Matrix, c: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centroids.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus(points: &Matrix, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.nrows();
    let mut centroids = Matrix::zeros(c, points.ncols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&points.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centroids, 0)).collect();
    for k in 1..c {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(k).copy_from(&points.row(pick));
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centroids, k));
        }
    }
    centroids
}

fn assign(points: &Matrix, centroids: &Matrix) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = (0..points.nrows())
        .map(|i| {
            let (best, d) = (0..centroids.nrows())
                .map(|k| (k, sq_dist(points, i, centroids, k)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            inertia += d;
            best
        })
        .collect();
    (labels, inertia)
}

fn lloyd(points: &Matrix, c: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64, Matrix) {
    let (n, dim) = points.shape();
    let mut centroids = plus_plus(points, c, rng);
    let (mut labels, mut inertia) = assign(points, &centroids);
    for _ in 0..MAX_LLOYD_ITERS {
        let mut sums = Matrix::zeros(c, dim);
        let mut counts = vec![0usize; c];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += points.row(i);
        }
        for (k, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mean = sums.row(k) / count as f64;
                centroids.row_mut(k).copy_from(&mean);
            } else {
                // Empty cluster: move it onto the worst-fit point.
                let far = (0..n)
                    .map(|i| (i, sq_dist(points, i, &centroids, labels[i])))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                centroids.row_mut(k).copy_from(&points.row(far));
            }
        }
        let (next, next_inertia) = assign(points, &centroids);
        let done = next == labels;
        labels = next;
        inertia = next_inertia;
        if done {
            break;
        }
    }
    (labels, inertia, centroids)
}

/// Clusters the rows of `points` into `c` groups, keeping the best of
/// `restarts` seeded runs. Restart `r` draws from stream `r` of a ChaCha
/// generator seeded with `seed`, so results do not depend on scheduling.
pub fn kmeans(points: &Matrix, c: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let n = points.nrows();
    if c == 0 || c > n {
        return Err(RgcError::InvalidInput(format!(
            "cannot form {c} clusters from {n} points"
        )));
    }
    crate::ensure_finite(points, "k-means input")?;
    let runs: Vec<(Vec<usize>, f64, Matrix)> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            lloyd(points, c, &mut rng)
        })
        .collect();
    let (labels, inertia, centroids) = runs
        .into_iter()
        .reduce(|best, run| if run.1 < best.1 { run } else { best })
        .expect("at least one restart");
    Ok(KMeansFit {
        assignment: LabelAssignment::with_classes(labels, c)?,
        inertia,
        centroids,
    })
}
