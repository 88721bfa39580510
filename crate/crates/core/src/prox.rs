//! Proximal operators and the dense linear-algebra pieces the solver leans on.
//!
//! Everything here is a pure function of its arguments.

use log::warn;
use nalgebra::{Cholesky, DVector, SymmetricEigen, SVD};

use crate::{ensure_finite, Matrix, Result, RgcError};

/// Singular values at or below this are counted as zero in rank diagnostics.
pub const RANK_EPS: f64 = 1e-12;

const SVD_MAX_ITERS: usize = 100_000;

/// One term `sigma * u * v^T` of a singular value decomposition.
#[derive(Debug, Clone)]
pub struct SingularTriplet {
    pub u: DVector<f64>,
    pub sigma: f64,
    pub v: DVector<f64>,
}

fn decompose(h: &Matrix) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(RgcError::InvalidInput(format!(
            "cannot decompose an empty {}x{} matrix",
            h.nrows(),
            h.ncols()
        )));
    }
    ensure_finite(h, "SVD input")?;
    SVD::try_new(h.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS).ok_or_else(|| {
        RgcError::Numerical(format!(
            "SVD of a {}x{} matrix did not converge in {SVD_MAX_ITERS} sweeps",
            h.nrows(),
            h.ncols()
        ))
    })
}

/// Full thin SVD as triplets, singular values nonincreasing.
pub fn svd_triplets(h: &Matrix) -> Result<Vec<SingularTriplet>> {
    let svd = decompose(h)?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    Ok(svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &sigma)| SingularTriplet {
            u: u.column(i).into_owned(),
            sigma,
            v: v_t.row(i).transpose(),
        })
        .collect())
}

/// Singular values of `h`, nonincreasing.
pub fn singular_values(h: &Matrix) -> Result<Vec<f64>> {
    Ok(decompose(h)?.singular_values.iter().copied().collect())
}

/// Result of a singular value shrinkage, with the shrunk spectrum kept for
/// objective and rank bookkeeping.
#[derive(Debug, Clone)]
pub struct Shrunk {
    pub matrix: Matrix,
    pub singular_values: Vec<f64>,
}

impl Shrunk {
    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }

    pub fn rank(&self) -> usize {
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_EPS)
            .count()
    }
}

/// Singular value thresholding: `U diag((sigma - tau)+) V^T`.
///
/// This is the minimizer of `||D||_* + 1/(2 tau) ||D - H||_F^2`.
pub fn svt(h: &Matrix, tau: f64) -> Result<Matrix> {
    svt_with_spectrum(h, tau).map(|s| s.matrix)
}

pub fn svt_with_spectrum(h: &Matrix, tau: f64) -> Result<Shrunk> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(RgcError::InvalidInput(format!(
            "SVT threshold must be finite and nonnegative, got {tau}"
        )));
    }
    let svd = decompose(h)?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    let shrunk: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| (s - tau).max(0.0))
        .collect();

    let mut out = Matrix::zeros(h.nrows(), h.ncols());
    for (i, &s) in shrunk.iter().enumerate() {
        if s > 0.0 {
            // out += s * u_i v_i^T
            out.ger(s, &u.column(i), &v_t.row(i).transpose(), 1.0);
        }
    }
    Ok(Shrunk {
        matrix: out,
        singular_values: shrunk,
    })
}

/// Elementwise soft thresholding `sign(g) * (|g| - tau)+`.
pub fn soft_threshold(g: &Matrix, tau: f64) -> Result<Matrix> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(RgcError::InvalidInput(format!(
            "soft threshold must be finite and nonnegative, got {tau}"
        )));
    }
    Ok(g.map(|x| shrink(x, tau)))
}

#[inline]
pub(crate) fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Right solve `M A = B` for symmetric positive definite `A`.
///
/// Uses a Cholesky factorization. If the factorization breaks down, retries
/// once on `A + 1e-10 * trace(A)/n * I`; if that also fails, or the relative
/// residual stays above `1e-10`, the smallest eigenvalue of `A` is reported.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(RgcError::InvalidInput(format!(
            "SPD solve needs a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.ncols() != n {
        return Err(RgcError::InvalidInput(format!(
            "right-hand side has {} columns, system is {n}x{n}",
            b.ncols()
        )));
    }
    ensure_finite(a, "SPD system matrix")?;
    ensure_finite(b, "SPD right-hand side")?;
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(RgcError::InvalidInput(format!(
            "SPD system matrix is not symmetric (max |A - A^T| = {asym:e})"
        )));
    }

    // M A = B  <=>  A M^T = B^T since A = A^T.
    let rhs = b.transpose();
    let solved = match Cholesky::new(a.clone()) {
        Some(chol) => Some(chol.solve(&rhs)),
        None => {
            let shift = 1e-10 * a.trace() / n as f64;
            warn!(
                "Cholesky pivot failure on {n}x{n} system; retrying with diagonal shift {shift:e}"
            );
            let mut reg = a.clone();
            for i in 0..n {
                reg[(i, i)] += shift;
            }
            Cholesky::new(reg).map(|chol| chol.solve(&rhs))
        }
    };

    let not_spd = || {
        let min_eig = SymmetricEigen::new(a.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        RgcError::Numerical(format!(
            "system matrix is not positive definite (smallest eigenvalue {min_eig:e})"
        ))
    };

    let m = solved.ok_or_else(not_spd)?.transpose();
    let b_norm = b.norm();
    if b_norm > 0.0 {
        let rel = (&m * a - b).norm() / b_norm;
        if rel.is_nan() || rel >= 1e-10 {
            let err = not_spd();
            return Err(RgcError::Numerical(format!(
                "SPD solve residual {rel:e} exceeds 1e-10; {err}"
            )));
        }
    }
    Ok(m)
}
