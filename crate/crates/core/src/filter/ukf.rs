//! Unscented Kalman filter steps specialized to the Gauss-Markov channel
//! state, plus the one-shot sigma-spread optimization.

use nalgebra::{DMatrix, DVector};

use super::unscented::{sigma_points, SigmaSet, UtParams};
use super::{spd_solve, symmetrize, FilterState, ObservationModel};
use crate::channel::{EvolutionParams, STATE_PER_PATH};
use crate::error::Error;
use crate::Result;

/// Deterministic part of the state evolution: gains decay by ρ, angles
/// persist.
pub(crate) fn propagate_state(x: &DVector<f64>, rho: f64) -> DVector<f64> {
    let mut out = x.clone();
    for block in 0..x.len() / STATE_PER_PATH {
        out[STATE_PER_PATH * block] *= rho;
        out[STATE_PER_PATH * block + 1] *= rho;
    }
    out
}

/// UKF time update: propagate sigma points through the deterministic
/// evolution, reform mean and covariance, and add the process noise.
pub fn ukf_predict(
    state: &FilterState,
    evo: &EvolutionParams,
    q: &DMatrix<f64>,
    p: &UtParams,
) -> Result<FilterState> {
    let m = state.dim();
    if q.nrows() != m || q.ncols() != m {
        return Err(Error::Config(format!(
            "process noise {}x{} does not match state dimension {m}",
            q.nrows(),
            q.ncols()
        )));
    }
    let sigma = sigma_points(state, p)?;
    let propagated: Vec<DVector<f64>> = sigma
        .points
        .iter()
        .map(|pt| propagate_state(pt, evo.rho))
        .collect();
    let mut mean = DVector::zeros(m);
    for (pt, w) in propagated.iter().zip(&sigma.w_mean) {
        mean += pt * *w;
    }
    let mut cov = q.clone();
    for (pt, w) in propagated.iter().zip(&sigma.w_cov) {
        let d = pt - &mean;
        cov += &d * d.transpose() * *w;
    }
    FilterState::new(mean, symmetrize(&cov))
}

/// UKF measurement update from sigma points re-drawn around the predicted
/// state: z̄ and Σ_z from the transformed points (plus R), cross covariance,
/// gain K = Σ_xz·Σ_z⁻¹, then x̄ + K·(y − z̄) and Σ̄ − K·Σ_z·Kᵀ.
pub fn ukf_update(
    pred: &FilterState,
    sigma: &SigmaSet,
    model: &dyn ObservationModel,
    y: &DVector<f64>,
    _p: &UtParams,
) -> Result<FilterState> {
    let m = pred.dim();
    let d = model.obs_dim();
    if y.len() != d {
        return Err(Error::Config(format!(
            "observation length {} does not match model dimension {d}",
            y.len()
        )));
    }
    let transformed: Vec<DVector<f64>> = sigma.points.iter().map(|pt| model.observe(pt)).collect();
    let mut z_mean = DVector::zeros(d);
    for (z, w) in transformed.iter().zip(&sigma.w_mean) {
        z_mean += z * *w;
    }
    let mut z_cov = model.noise_cov().clone();
    let mut xz_cov = DMatrix::zeros(m, d);
    for ((z, pt), w) in transformed.iter().zip(&sigma.points).zip(&sigma.w_cov) {
        let dz = z - &z_mean;
        xz_cov += (pt - &pred.mean) * dz.transpose() * *w;
        z_cov += &dz * dz.transpose() * *w;
    }
    // K = Σ_xz·Σ_z⁻¹ via Σ_z·Kᵀ = Σ_xzᵀ.
    let gain = spd_solve(&z_cov, &xz_cov.transpose())?.transpose();
    let mean = &pred.mean + &gain * (y - &z_mean);
    let cov = symmetrize(&(&pred.cov - &gain * &z_cov * gain.transpose()));
    FilterState::new(mean, cov)
}

/// Predicted observation mean under a candidate parameter set.
fn predicted_observation(
    pred: &FilterState,
    model: &dyn ObservationModel,
    p: &UtParams,
) -> Result<DVector<f64>> {
    let sigma = sigma_points(pred, p)?;
    let mut z_mean = DVector::zeros(model.obs_dim());
    for (pt, w) in sigma.points.iter().zip(&sigma.w_mean) {
        z_mean += model.observe(pt) * *w;
    }
    Ok(z_mean)
}

/// Scan a (γ, κ) grid for the candidate whose predicted observation mean
/// lands closest (squared Euclidean norm) to the received pilot. Ties keep
/// the earliest grid entry.
pub fn optimize_spread(
    pred: &FilterState,
    model: &dyn ObservationModel,
    y: &DVector<f64>,
    grid: &[UtParams],
) -> Result<UtParams> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "sigma-spread candidate grid is empty".into(),
        ));
    }
    let m = pred.dim();
    for cand in grid {
        if cand.scaled_dim(m) <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "candidate gamma={}, kappa={} violates Λ+m > 0",
                cand.gamma, cand.kappa
            )));
        }
    }
    let mut best = grid[0];
    let mut best_obj = f64::INFINITY;
    for cand in grid {
        let z_mean = predicted_observation(pred, model, cand)?;
        let obj = (y - z_mean).norm_squared();
        if obj < best_obj {
            best_obj = obj;
            best = *cand;
        }
    }
    Ok(best)
}
