//! Observation models mapping tracked channel states to pilot predictions.
//!
//! The DL and UL adapters rebuild the selected beamspace entries from the
//! state per evaluation. With one-hot selectors, wᴴ·H_b·p collapses to one
//! matrix entry, so each adapter contracts the DFT rows against the
//! steering vectors instead of materializing the full transform; the two
//! routes agree to floating-point accuracy (checked in the tests).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{split_complex, split_noise_cov, ObservationModel};
use crate::channel::{steering_vector, ArrayGeometry, STATE_PER_PATH};
use crate::error::Error;
use crate::link::BeamSelector;
use crate::Result;

/// One conjugated DFT row (a fixed beam) ready to contract with steering
/// vectors.
#[derive(Debug, Clone)]
struct BeamRow {
    row: DVector<Complex64>,
    geom: ArrayGeometry,
}

impl BeamRow {
    fn new(u: &DMatrix<Complex64>, beam: &BeamSelector, geom: ArrayGeometry) -> Result<Self> {
        if u.nrows() != beam.length || u.ncols() != geom.n_elements {
            return Err(Error::Config(format!(
                "DFT matrix {}x{} does not match beam length {} / array size {}",
                u.nrows(),
                u.ncols(),
                beam.length,
                geom.n_elements
            )));
        }
        Ok(Self {
            row: u.row(beam.index).transpose(),
            geom,
        })
    }

    /// [U·a(θ)] at this beam index.
    fn project(&self, theta: f64) -> Complex64 {
        let a = steering_vector(&self.geom, theta);
        self.row.iter().zip(a.iter()).map(|(u, s)| u * s).sum()
    }
}

/// Selected beamspace entry √(N_t·N_r/L)·Σ_l α_l·[U_r·a_l]_v·[U_t·a_l]_c*
/// for the packed path state.
fn selected_entry(rx: &BeamRow, tx: &BeamRow, state: &[f64]) -> Complex64 {
    let n_paths = state.len() / STATE_PER_PATH;
    let scale = ((rx.geom.n_elements * tx.geom.n_elements) as f64 / n_paths as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..n_paths {
        let alpha = Complex64::new(state[STATE_PER_PATH * p], state[STATE_PER_PATH * p + 1]);
        let theta_d = state[STATE_PER_PATH * p + 2];
        let theta_a = state[STATE_PER_PATH * p + 3];
        acc += alpha * rx.project(theta_a) * tx.project(theta_d).conj();
    }
    acc * scale
}

/// Downlink observation wᴴ·H_b(x)·p for one tracked user with a unit
/// pilot; output is the complex scalar split into two reals.
pub struct DlObservation {
    rx: BeamRow,
    tx: BeamRow,
    n_paths: usize,
    r: DMatrix<f64>,
}

impl DlObservation {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u_rx: &DMatrix<Complex64>,
        u_tx: &DMatrix<Complex64>,
        rx_geom: ArrayGeometry,
        tx_geom: ArrayGeometry,
        combiner: &BeamSelector,
        precoder: &BeamSelector,
        n_paths: usize,
        noise_var: f64,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::Config("observation needs at least one path".into()));
        }
        Ok(Self {
            rx: BeamRow::new(u_rx, combiner, rx_geom)?,
            tx: BeamRow::new(u_tx, precoder, tx_geom)?,
            n_paths,
            r: split_noise_cov(noise_var, 2),
        })
    }
}

impl ObservationModel for DlObservation {
    fn obs_dim(&self) -> usize {
        2
    }

    fn observe(&self, state: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(state.len(), STATE_PER_PATH * self.n_paths);
        let z = selected_entry(&self.rx, &self.tx, state.as_slice());
        split_complex(&[z])
    }

    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Joint uplink observation Wᴴ·H_b(x)·P·D·s over all users (unit pilots):
/// entry j sums every user's contribution through combiner j, so
/// inter-user interference is part of the model. Output is K complex
/// entries split into 2K reals.
pub struct UlObservation {
    combiners: Vec<BeamRow>,
    precoders: Vec<BeamRow>,
    inv_sqrt_loss: Vec<f64>,
    r: DMatrix<f64>,
}

impl UlObservation {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u_rx: &DMatrix<Complex64>,
        u_tx: &DMatrix<Complex64>,
        rx_geom: ArrayGeometry,
        tx_geom: ArrayGeometry,
        combiners: &[BeamSelector],
        precoders: &[BeamSelector],
        path_loss: &[f64],
        noise_var: f64,
    ) -> Result<Self> {
        let k = combiners.len();
        if k == 0 || precoders.len() != k || path_loss.len() != k {
            return Err(Error::Config(format!(
                "combiner/precoder/path-loss counts disagree: {k}, {}, {}",
                precoders.len(),
                path_loss.len()
            )));
        }
        Ok(Self {
            combiners: combiners
                .iter()
                .map(|w| BeamRow::new(u_rx, w, rx_geom))
                .collect::<Result<_>>()?,
            precoders: precoders
                .iter()
                .map(|p| BeamRow::new(u_tx, p, tx_geom))
                .collect::<Result<_>>()?,
            inv_sqrt_loss: path_loss.iter().map(|rho| 1.0 / rho.sqrt()).collect(),
            r: split_noise_cov(noise_var, 2 * k),
        })
    }

    pub fn n_users(&self) -> usize {
        self.combiners.len()
    }
}

impl ObservationModel for UlObservation {
    fn obs_dim(&self) -> usize {
        2 * self.n_users()
    }

    fn observe(&self, state: &DVector<f64>) -> DVector<f64> {
        let k = self.n_users();
        debug_assert_eq!(state.len(), STATE_PER_PATH * k);
        let mut z = vec![Complex64::new(0.0, 0.0); k];
        for (j, w) in self.combiners.iter().enumerate() {
            for i in 0..k {
                let sub = &state.as_slice()[STATE_PER_PATH * i..STATE_PER_PATH * (i + 1)];
                z[j] += selected_entry(w, &self.precoders[i], sub) * self.inv_sqrt_loss[i];
            }
        }
        split_complex(&z)
    }

    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Per-user uplink view for the separate-tracking baseline: user k's own
/// term of observation entry k, ignoring the other users' interference.
pub struct UlUserObservation {
    rx: BeamRow,
    tx: BeamRow,
    inv_sqrt_loss: f64,
    r: DMatrix<f64>,
}

impl UlUserObservation {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u_rx: &DMatrix<Complex64>,
        u_tx: &DMatrix<Complex64>,
        rx_geom: ArrayGeometry,
        tx_geom: ArrayGeometry,
        combiner: &BeamSelector,
        precoder: &BeamSelector,
        path_loss: f64,
        noise_var: f64,
    ) -> Result<Self> {
        Ok(Self {
            rx: BeamRow::new(u_rx, combiner, rx_geom)?,
            tx: BeamRow::new(u_tx, precoder, tx_geom)?,
            inv_sqrt_loss: 1.0 / path_loss.sqrt(),
            r: split_noise_cov(noise_var, 2),
        })
    }
}

impl ObservationModel for UlUserObservation {
    fn obs_dim(&self) -> usize {
        2
    }

    fn observe(&self, state: &DVector<f64>) -> DVector<f64> {
        let z = selected_entry(&self.rx, &self.tx, state.as_slice()) * self.inv_sqrt_loss;
        split_complex(&[z])
    }

    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Fixed-matrix linear observation, used by the affine oracle checks.
pub struct LinearObservation {
    h: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl LinearObservation {
    pub fn new(h: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        if r.nrows() != h.nrows() || r.ncols() != h.nrows() {
            return Err(Error::Config(
                "noise covariance must be square with the observation dimension".into(),
            ));
        }
        Ok(Self { h, r })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }
}

impl ObservationModel for LinearObservation {
    fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    fn observe(&self, state: &DVector<f64>) -> DVector<f64> {
        &self.h * state
    }

    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}
