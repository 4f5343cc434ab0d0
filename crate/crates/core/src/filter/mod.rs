//! State estimation: unscented transform machinery, UKF, and an EKF
//! baseline with numeric Jacobians.

mod ekf;
mod linalg;
mod observation;
mod ukf;
mod unscented;

pub use ekf::ekf_step;
pub use observation::{DlObservation, LinearObservation, UlObservation, UlUserObservation};
pub use ukf::{optimize_spread, ukf_predict, ukf_update};
pub use unscented::{compute_weights, sigma_points, SigmaSet, UtParams};

pub(crate) use linalg::{psd_sqrt, spd_solve, symmetrize};

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Gaussian filter state: mean vector of dimension m and m×m covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl FilterState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Config(format!(
                "covariance {}x{} does not match state dimension {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Symmetry and positive-semidefiniteness check (tolerances 1e−10 and
    /// −1e−9 on the smallest eigenvalue).
    pub fn health_check(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.cov[(i, j)] - self.cov[(j, i)]).abs() > 1e-10 {
                    return Err(Error::numerical(format!(
                        "covariance asymmetry {:e} at ({i},{j})",
                        (self.cov[(i, j)] - self.cov[(j, i)]).abs()
                    )));
                }
            }
        }
        let min_eig = linalg::min_eigenvalue(&self.cov);
        if min_eig < -1e-9 {
            return Err(Error::numerical(format!(
                "covariance indefinite, smallest eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }
}

/// Deterministic map from a state vector to a real observation vector.
/// Complex observations are split as stacked real parts then imaginary
/// parts, so `obs_dim` is twice the complex measurement count.
pub trait ObservationModel {
    fn obs_dim(&self) -> usize;
    fn observe(&self, state: &DVector<f64>) -> DVector<f64>;
    /// Measurement noise covariance R on the split real vector.
    fn noise_cov(&self) -> &DMatrix<f64>;
}

/// R = (σ_v²/2)·I on a split real observation of dimension `obs_dim`,
/// matching the CN(0, σ_v²) total-variance noise convention.
pub fn split_noise_cov(noise_var: f64, obs_dim: usize) -> DMatrix<f64> {
    DMatrix::identity(obs_dim, obs_dim) * (noise_var / 2.0)
}

/// Stack a complex vector as (all real parts, then all imaginary parts).
pub fn split_complex(z: &[num_complex::Complex64]) -> DVector<f64> {
    let k = z.len();
    let mut out = DVector::zeros(2 * k);
    for (i, c) in z.iter().enumerate() {
        out[i] = c.re;
        out[k + i] = c.im;
    }
    out
}
