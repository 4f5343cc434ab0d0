//! Geometric mmWave channel model and its beamspace representation.
//!
//! A user's channel is a sum of rank-one path contributions built from ULA
//! steering vectors. A unitary DFT matrix per array side maps the spatial
//! channel into the beam domain, where path energy concentrates on few
//! entries (the lens antenna array picture). Channel parameters evolve
//! slot-to-slot with a first-order Gauss-Markov gain process and Gaussian
//! random-walk angles.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::Result;

/// Number of real state entries per tracked path: gain (re, im) plus the
/// two angles.
pub const STATE_PER_PATH: usize = 4;

/// Uniform linear array description. Only the element count and the
/// spacing-to-wavelength ratio enter any formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    /// Antenna spacing over carrier wavelength (d/λ), 0.5 for half-wave.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, spacing_ratio: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidParameter(
                "n_elements must be at least 1".into(),
            ));
        }
        if spacing_ratio <= 0.0 || !spacing_ratio.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spacing_ratio must be positive and finite, got {spacing_ratio}"
            )));
        }
        Ok(Self {
            n_elements,
            spacing_ratio,
        })
    }

    /// Half-wavelength spacing, the default lens array configuration.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }
}

/// One propagation path: complex gain split into real/imaginary parts plus
/// angle of arrival and angle of departure in radians. Angles are stored
/// unwrapped; `sin` inside the steering vector handles periodicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub theta_a: f64,
    pub theta_d: f64,
}

impl PathState {
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_re, self.alpha_im)
    }
}

/// All resolvable paths between one user and the base station. The path
/// count is fixed for the lifetime of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub paths: Vec<PathState>,
}

impl UserChannel {
    pub fn new(paths: Vec<PathState>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParameter(
                "a user channel needs at least one path".into(),
            ));
        }
        Ok(Self { paths })
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Pack paths into a real state vector, per-path blocks of
    /// (alpha_re, alpha_im, theta_d, theta_a).
    pub fn to_state_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(STATE_PER_PATH * self.paths.len());
        for (i, p) in self.paths.iter().enumerate() {
            v[STATE_PER_PATH * i] = p.alpha_re;
            v[STATE_PER_PATH * i + 1] = p.alpha_im;
            v[STATE_PER_PATH * i + 2] = p.theta_d;
            v[STATE_PER_PATH * i + 3] = p.theta_a;
        }
        v
    }

    /// Inverse of [`UserChannel::to_state_vector`]. The slice length must be
    /// a multiple of four.
    pub fn from_state_slice(state: &[f64]) -> Result<Self> {
        if state.is_empty() || !state.len().is_multiple_of(STATE_PER_PATH) {
            return Err(Error::Config(format!(
                "state length {} is not a positive multiple of {STATE_PER_PATH}",
                state.len()
            )));
        }
        let paths = state
            .chunks_exact(STATE_PER_PATH)
            .map(|c| PathState {
                alpha_re: c[0],
                alpha_im: c[1],
                theta_d: c[2],
                theta_a: c[3],
            })
            .collect();
        Ok(Self { paths })
    }
}

/// Temporal evolution parameters: Gauss-Markov gain correlation and the
/// per-slot angle random-walk variances (rad²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    pub rho: f64,
    pub sigma2_a: f64,
    pub sigma2_d: f64,
}

impl EvolutionParams {
    pub fn new(rho: f64, sigma2_a: f64, sigma2_d: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (0, 1], got {rho}"
            )));
        }
        if sigma2_a < 0.0 || sigma2_d < 0.0 {
            return Err(Error::InvalidParameter(
                "angle variances must be non-negative".into(),
            ));
        }
        Ok(Self {
            rho,
            sigma2_a,
            sigma2_d,
        })
    }

    /// Innovation variance of the gain process, split evenly between the
    /// real and imaginary components.
    pub fn gain_noise_var(&self) -> f64 {
        1.0 - self.rho * self.rho
    }
}

/// Complex channel matrix in the beam domain, receive beams × transmit
/// beams. Produced by [`beamspace_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct BeamspaceChannel {
    pub entries: DMatrix<Complex64>,
}

impl BeamspaceChannel {
    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.entries.ncols()
    }
}

/// ULA steering vector: element q ∈ {−(N−1)/2, …, (N−1)/2} carries phase
/// −2π·(d/λ)·q·sin θ, normalized to unit Euclidean norm.
pub fn steering_vector(geom: &ArrayGeometry, theta: f64) -> DVector<Complex64> {
    let n = geom.n_elements;
    let scale = 1.0 / (n as f64).sqrt();
    let phi = geom.spacing_ratio * theta.sin();
    let center = (n as f64 - 1.0) / 2.0;
    DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let q = i as f64 - center;
            Complex64::from_polar(scale, -2.0 * PI * phi * q)
        }),
    )
}

/// Virtual (beam) angle of DFT row `row` for an `n`-beam array.
pub fn virtual_angle(n: usize, row: usize) -> f64 {
    (row as f64 - (n as f64 + 1.0) / 2.0) / n as f64
}

/// Unitary DFT matrix whose rows are conjugated virtual steering vectors,
/// one per virtual angle.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let center = (n as f64 - 1.0) / 2.0;
    DMatrix::from_fn(n, n, |row, col| {
        let psi = virtual_angle(n, row);
        // conj of e^{-j2πψ(col - center)}
        Complex64::from_polar(scale, 2.0 * PI * psi * (col as f64 - center))
    })
}

/// Spatial channel matrix between a receive and a transmit array:
/// √(N_t·N_r/L)·Σ_l α_l·a(θ_A,l)·aᴴ(θ_D,l). Rows index the receive array.
pub fn spatial_channel(
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    chan: &UserChannel,
) -> DMatrix<Complex64> {
    let l = chan.n_paths() as f64;
    let scale = ((rx.n_elements * tx.n_elements) as f64 / l).sqrt();
    let mut h = DMatrix::zeros(rx.n_elements, tx.n_elements);
    for p in &chan.paths {
        let a_rx = steering_vector(rx, p.theta_a);
        let a_tx = steering_vector(tx, p.theta_d);
        h += (a_rx * a_tx.adjoint()) * (p.alpha() * scale);
    }
    h
}

/// Beamspace transform U_r·H·U_tᴴ. Frobenius norm is preserved because both
/// factors are unitary.
pub fn beamspace_transform(
    h: &DMatrix<Complex64>,
    u_rx: &DMatrix<Complex64>,
    u_tx: &DMatrix<Complex64>,
) -> Result<BeamspaceChannel> {
    if u_rx.ncols() != h.nrows() || u_tx.ncols() != h.ncols() {
        return Err(Error::Config(format!(
            "beamspace transform dimension mismatch: H is {}x{}, U_r is {}x{}, U_t is {}x{}",
            h.nrows(),
            h.ncols(),
            u_rx.nrows(),
            u_rx.ncols(),
            u_tx.nrows(),
            u_tx.ncols()
        )));
    }
    Ok(BeamspaceChannel {
        entries: u_rx * h * u_tx.adjoint(),
    })
}

/// Convenience: spatial construction plus beamspace transform in one call.
pub fn beamspace_channel(
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    chan: &UserChannel,
    u_rx: &DMatrix<Complex64>,
    u_tx: &DMatrix<Complex64>,
) -> Result<BeamspaceChannel> {
    beamspace_transform(&spatial_channel(rx, tx, chan), u_rx, u_tx)
}

/// Dirichlet kernel sin(πnφ)/sin(πφ) with the removable singularities at
/// integer φ evaluated by their limit ±n.
pub fn dirichlet(n: usize, phi: f64) -> f64 {
    let denom = (PI * phi).sin();
    if denom.abs() < 1e-12 {
        // Limit at integer φ = k: n·(−1)^{k(n−1)}.
        let k = phi.round() as i64;
        if (k * (n as i64 - 1)) % 2 == 0 {
            n as f64
        } else {
            -(n as f64)
        }
    } else {
        (PI * n as f64 * phi).sin() / denom
    }
}

/// Single beamspace-pattern entry: sum over the transmit aperture of a
/// phase-shifted Dirichlet kernel. Equals N_t·N_r·[U_r·a(θ_A)aᴴ(θ_D)·U_tᴴ]
/// at the (ψ_r, ψ_t) beam pair, with φ = (d/λ)·sin θ on each side.
pub fn beamspace_element(
    phi_a: f64,
    phi_d: f64,
    psi_t: f64,
    psi_r: f64,
    n_t: usize,
    n_r: usize,
) -> Complex64 {
    let d_rx = dirichlet(n_r, phi_a - psi_r);
    let center = (n_t as f64 - 1.0) / 2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n_t {
        let q = i as f64 - center;
        acc += Complex64::from_polar(1.0, -2.0 * PI * (psi_t - phi_d) * q);
    }
    acc * d_rx
}

/// Advance a channel by one time slot: gains follow the first-order
/// Gauss-Markov recursion α ← ρα + ζ with ζ ~ CN(0, 1−ρ²); angles take
/// independent Gaussian steps. Draw order per path is gain re, gain im,
/// AoD step, AoA step.
pub fn evolve<R: Rng + ?Sized>(
    chan: &UserChannel,
    params: &EvolutionParams,
    rng: &mut R,
) -> UserChannel {
    let gain_std = (params.gain_noise_var() / 2.0).sqrt();
    let aoa_std = params.sigma2_a.sqrt();
    let aod_std = params.sigma2_d.sqrt();
    let paths = chan
        .paths
        .iter()
        .map(|p| {
            let zeta_re: f64 = rng.sample(StandardNormal);
            let zeta_im: f64 = rng.sample(StandardNormal);
            let xi_d: f64 = rng.sample(StandardNormal);
            let xi_a: f64 = rng.sample(StandardNormal);
            PathState {
                alpha_re: params.rho * p.alpha_re + gain_std * zeta_re,
                alpha_im: params.rho * p.alpha_im + gain_std * zeta_im,
                theta_d: p.theta_d + aod_std * xi_d,
                theta_a: p.theta_a + aoa_std * xi_a,
            }
        })
        .collect();
    UserChannel { paths }
}

/// Diagonal process-noise covariance for `n_paths` stacked paths, blocks of
/// ((1−ρ²)/2, (1−ρ²)/2, σ²_D, σ²_A) matching the state layout.
pub fn process_noise_cov(params: &EvolutionParams, n_paths: usize) -> DMatrix<f64> {
    let g = params.gain_noise_var() / 2.0;
    let block = [g, g, params.sigma2_d, params.sigma2_a];
    let m = STATE_PER_PATH * n_paths;
    DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            block[r % STATE_PER_PATH]
        } else {
            0.0
        }
    })
}

/// Draw an initial channel: angles uniform on (0, π), gains standard
/// complex normal. Draw order per path is AoA, AoD, gain re, gain im.
pub fn draw_initial_channel<R: Rng + ?Sized>(n_paths: usize, rng: &mut R) -> UserChannel {
    let paths = (0..n_paths)
        .map(|_| {
            let theta_a = rng.gen_range(0.0..PI);
            let theta_d = rng.gen_range(0.0..PI);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            PathState {
                alpha_re: re / 2.0_f64.sqrt(),
                alpha_im: im / 2.0_f64.sqrt(),
                theta_a,
                theta_d,
            }
        })
        .collect();
    UserChannel { paths }
}
