//! Small numeric helpers shared by the filters.

use nalgebra::{Cholesky, DMatrix};

use crate::error::Error;
use crate::Result;

/// Jitter escalation schedule for barely-indefinite matrices.
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Lower-triangular factor L with L·Lᵀ = M for a symmetric positive
/// *semi*definite M. Zero pivots (within tolerance) produce zero columns, so
/// a zero matrix factors to zero instead of failing. Genuinely indefinite
/// input returns an error.
fn psd_cholesky(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > tol {
            let root = d.sqrt();
            l[(j, j)] = root;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / root;
            }
        } else if d >= -tol {
            // Semidefinite direction: leave the column zero.
        } else {
            return Err(d);
        }
    }
    Ok(l)
}

/// Lower-triangular square root of a PSD matrix with jitter escalation:
/// on an indefinite pivot, add ε·I with ε from 1e−10 up to 1e−4 (×10 steps)
/// before giving up.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    match psd_cholesky(&sym) {
        Ok(l) => Ok(l),
        Err(_) => {
            let mut jitter = JITTER_START;
            let eye = DMatrix::identity(sym.nrows(), sym.ncols());
            while jitter <= JITTER_MAX {
                if let Ok(l) = psd_cholesky(&(&sym + &eye * jitter)) {
                    return Ok(l);
                }
                jitter *= 10.0;
            }
            Err(Error::numerical(format!(
                "matrix square root failed after jitter up to {JITTER_MAX:e}"
            )))
        }
    }
}

/// Solve A·X = B for symmetric positive-definite A, escalating through the
/// jitter schedule if the factorization fails.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(a);
    if let Some(chol) = Cholesky::new(sym.clone()) {
        return Ok(chol.solve(b));
    }
    let eye = DMatrix::identity(sym.nrows(), sym.ncols());
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX {
        if let Some(chol) = Cholesky::new(&sym + &eye * jitter) {
            return Ok(chol.solve(b));
        }
        jitter *= 10.0;
    }
    Err(Error::numerical(
        "innovation covariance solve failed after jitter escalation".to_string(),
    ))
}
