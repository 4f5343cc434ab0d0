//! Sigma-point generation and weights for the unscented transform.

use nalgebra::DVector;

use super::{psd_sqrt, FilterState};
use crate::error::Error;
use crate::Result;

/// Sigma-point scaling parameters. γ and κ control the spread through
/// Λ = γ²(m+κ) − m; β folds distribution knowledge into the center
/// covariance weight (2 is optimal for Gaussians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtParams {
    pub gamma: f64,
    pub kappa: f64,
    pub beta: f64,
}

impl UtParams {
    pub fn new(gamma: f64, kappa: f64) -> Result<Self> {
        Self::with_beta(gamma, kappa, 2.0)
    }

    pub fn with_beta(gamma: f64, kappa: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        if kappa < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be non-negative, got {kappa}"
            )));
        }
        Ok(Self { gamma, kappa, beta })
    }

    /// Λ = γ²(m+κ) − m for state dimension m.
    pub fn lambda(&self, m: usize) -> f64 {
        self.gamma * self.gamma * (m as f64 + self.kappa) - m as f64
    }

    /// m + Λ, the sigma-point scale factor; must be strictly positive.
    pub fn scaled_dim(&self, m: usize) -> f64 {
        m as f64 + self.lambda(m)
    }
}

impl Default for UtParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            kappa: 0.0,
            beta: 2.0,
        }
    }
}

/// 2m+1 sigma points with their mean and covariance weights.
#[derive(Debug, Clone)]
pub struct SigmaSet {
    pub points: Vec<DVector<f64>>,
    pub w_mean: Vec<f64>,
    pub w_cov: Vec<f64>,
}

impl SigmaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted mean of the points under the mean weights.
    pub fn weighted_mean(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.points[0].len());
        for (p, w) in self.points.iter().zip(&self.w_mean) {
            acc += p * *w;
        }
        acc
    }
}

/// Mean and covariance weights for dimension m: the center point carries
/// Λ/(Λ+m) (plus 1−γ²+β for the covariance), the rest 1/(2(m+Λ)) each.
pub fn compute_weights(m: usize, p: &UtParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let lambda = p.lambda(m);
    let denom = lambda + m as f64;
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Λ+m must be positive, got {denom} (gamma={}, kappa={}, m={m})",
            p.gamma, p.kappa
        )));
    }
    let w_side = 1.0 / (2.0 * denom);
    let mut w_mean = vec![w_side; 2 * m + 1];
    let mut w_cov = vec![w_side; 2 * m + 1];
    w_mean[0] = lambda / denom;
    w_cov[0] = lambda / denom + (1.0 - p.gamma * p.gamma + p.beta);
    Ok((w_mean, w_cov))
}

/// Symmetric sigma points around the state mean, offset by the columns of
/// the lower-triangular factor of (m+Λ)·Σ.
pub fn sigma_points(state: &FilterState, p: &UtParams) -> Result<SigmaSet> {
    let m = state.dim();
    let (w_mean, w_cov) = compute_weights(m, p)?;
    let scaled = &state.cov * p.scaled_dim(m);
    let factor = psd_sqrt(&scaled)?;
    let mut points = Vec::with_capacity(2 * m + 1);
    points.push(state.mean.clone());
    for i in 0..m {
        points.push(&state.mean + factor.column(i));
    }
    for i in 0..m {
        points.push(&state.mean - factor.column(i));
    }
    Ok(SigmaSet {
        points,
        w_mean,
        w_cov,
    })
}
