//! Extended Kalman filter baseline with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use super::ukf::propagate_state;
use super::{spd_solve, symmetrize, FilterState, ObservationModel};
use crate::channel::{EvolutionParams, STATE_PER_PATH};
use crate::error::Error;
use crate::Result;

const FD_STEP: f64 = 1e-6;

/// Jacobian of the observation map at `x`, column j from a central
/// difference with step 1e−6.
fn numeric_jacobian(model: &dyn ObservationModel, x: &DVector<f64>) -> DMatrix<f64> {
    let m = x.len();
    let d = model.obs_dim();
    let mut jac = DMatrix::zeros(d, m);
    let mut probe = x.clone();
    for j in 0..m {
        probe[j] = x[j] + FD_STEP;
        let plus = model.observe(&probe);
        probe[j] = x[j] - FD_STEP;
        let minus = model.observe(&probe);
        probe[j] = x[j];
        jac.set_column(j, &((plus - minus) / (2.0 * FD_STEP)));
    }
    jac
}

/// One EKF predict-update cycle: linear prediction with per-path
/// diag(ρ, ρ, 1, 1) plus Q, then a first-order update around the predicted
/// mean using the finite-difference Jacobian.
pub fn ekf_step(
    state: &FilterState,
    evo: &EvolutionParams,
    q: &DMatrix<f64>,
    model: &dyn ObservationModel,
    y: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<FilterState> {
    let m = state.dim();
    if !m.is_multiple_of(STATE_PER_PATH) {
        return Err(Error::Config(format!(
            "EKF state dimension {m} is not a multiple of {STATE_PER_PATH}"
        )));
    }
    if y.len() != model.obs_dim() || r.nrows() != y.len() || r.ncols() != y.len() {
        return Err(Error::Config(
            "observation, model, and noise dimensions disagree".into(),
        ));
    }
    // Predict.
    let pred_mean = propagate_state(&state.mean, evo.rho);
    let mut a_diag = DVector::from_element(m, 1.0);
    for block in 0..m / STATE_PER_PATH {
        a_diag[STATE_PER_PATH * block] = evo.rho;
        a_diag[STATE_PER_PATH * block + 1] = evo.rho;
    }
    let a = DMatrix::from_diagonal(&a_diag);
    let pred_cov = symmetrize(&(&a * &state.cov * a.transpose() + q));

    // Update.
    let jac = numeric_jacobian(model, &pred_mean);
    let s = &jac * &pred_cov * jac.transpose() + r;
    // K = Σ̄·Gᵀ·S⁻¹ via S·Kᵀ = G·Σ̄.
    let gain = spd_solve(&s, &(&jac * &pred_cov))?.transpose();
    let innovation = y - model.observe(&pred_mean);
    let mean = &pred_mean + &gain * innovation;
    let cov = symmetrize(&(&pred_cov - &gain * &s * gain.transpose()));
    FilterState::new(mean, cov)
}
