//! Pilot link layer: one-hot beam selection and noisy DL/UL observations.
//!
//! Lens antenna arrays select beams with switches, so combiners and
//! precoders are one-hot vectors; applying one is a row or column
//! extraction from the beamspace channel.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::BeamspaceChannel;
use crate::error::Error;
use crate::Result;

/// One-hot beam selector over an array of `length` beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamSelector {
    pub index: usize,
    pub length: usize,
}

impl BeamSelector {
    pub fn new(index: usize, length: usize) -> Result<Self> {
        if index >= length {
            return Err(Error::InvalidParameter(format!(
                "beam index {index} out of range for {length} beams"
            )));
        }
        Ok(Self { index, length })
    }

    /// Realized selection vector: unit entry at `index`, zero elsewhere.
    pub fn to_vector(&self) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.length);
        v[self.index] = Complex64::new(1.0, 0.0);
        v
    }
}

/// Link-level configuration shared by the DL and UL observation builders.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub n_users: usize,
    /// Total complex noise variance per receive element (σ_v²).
    pub noise_var: f64,
    /// Average path loss ρ_k per user; the uplink scales user k by 1/√ρ_k.
    pub path_loss: Vec<f64>,
    /// Unit-magnitude pilot symbol per user.
    pub pilots: Vec<Complex64>,
}

impl LinkConfig {
    /// Unit pilots and unit path loss for `n_users` users.
    pub fn uniform(n_users: usize, noise_var: f64) -> Result<Self> {
        Self::new(
            n_users,
            noise_var,
            vec![1.0; n_users],
            vec![Complex64::new(1.0, 0.0); n_users],
        )
    }

    pub fn new(
        n_users: usize,
        noise_var: f64,
        path_loss: Vec<f64>,
        pilots: Vec<Complex64>,
    ) -> Result<Self> {
        if noise_var < 0.0 {
            return Err(Error::InvalidParameter(
                "noise variance must be non-negative".into(),
            ));
        }
        if path_loss.len() != n_users || pilots.len() != n_users {
            return Err(Error::Config(format!(
                "path_loss/pilot lengths ({}, {}) must equal n_users ({n_users})",
                path_loss.len(),
                pilots.len()
            )));
        }
        if path_loss.iter().any(|p| *p <= 0.0) {
            return Err(Error::InvalidParameter(
                "path loss entries must be positive".into(),
            ));
        }
        if pilots.iter().any(|s| (s.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidParameter(
                "pilot symbols must have unit magnitude".into(),
            ));
        }
        Ok(Self {
            n_users,
            noise_var,
            path_loss,
            pilots,
        })
    }
}

/// Pick the receive/transmit beam pair holding the maximum-magnitude entry.
/// Ties break toward the smallest row index, then the smallest column.
pub fn select_beams(h_b: &BeamspaceChannel) -> Result<(BeamSelector, BeamSelector)> {
    let m = &h_b.entries;
    let mut best = (0usize, 0usize);
    let mut best_mag = -1.0;
    for v in 0..m.nrows() {
        for c in 0..m.ncols() {
            let mag = m[(v, c)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = (v, c);
            }
        }
    }
    if best_mag <= 0.0 {
        return Err(Error::DegenerateChannel(
            "all beamspace entries are zero".into(),
        ));
    }
    Ok((
        BeamSelector::new(best.0, m.nrows())?,
        BeamSelector::new(best.1, m.ncols())?,
    ))
}

/// One complex Gaussian sample with total variance `var`.
fn complex_noise<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let std = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(std * re, std * im)
}

/// Noise vector over `len` receive elements, total complex variance `var`
/// per element.
fn noise_vector<R: Rng + ?Sized>(len: usize, var: f64, rng: &mut R) -> DVector<Complex64> {
    DVector::from_iterator(len, (0..len).map(|_| complex_noise(var, rng)))
}

/// Downlink pilot for user `k`: own signal, interference from all other
/// users' precoders through user k's channel, and combined receiver noise.
/// Draws one noise sample per receive element so that UL and DL agree for
/// identical seeds.
pub fn dl_received<R: Rng + ?Sized>(
    k: usize,
    channels: &[BeamspaceChannel],
    precoders: &[BeamSelector],
    combiner: &BeamSelector,
    cfg: &LinkConfig,
    rng: &mut R,
) -> Result<Complex64> {
    if k >= cfg.n_users || channels.len() != cfg.n_users || precoders.len() != cfg.n_users {
        return Err(Error::Config(format!(
            "user index {k} or channel/precoder counts inconsistent with K = {}",
            cfg.n_users
        )));
    }
    let h = &channels[k].entries;
    if combiner.length != h.nrows() {
        return Err(Error::Config(format!(
            "combiner length {} does not match {} receive beams",
            combiner.length,
            h.nrows()
        )));
    }
    let row = combiner.index;
    let mut y = Complex64::new(0.0, 0.0);
    for (i, p) in precoders.iter().enumerate() {
        if p.length != h.ncols() {
            return Err(Error::Config(format!(
                "precoder {i} length {} does not match {} transmit beams",
                p.length,
                h.ncols()
            )));
        }
        y += h[(row, p.index)] * cfg.pilots[i];
    }
    let v = noise_vector(h.nrows(), cfg.noise_var, rng);
    Ok(y + v[row])
}

/// Uplink pilot vector from all users: entry j collects every user's signal
/// through combiner j plus one noise sample, i.e. Wᴴ·H_b·P·D·s + Wᴴ·v with
/// block-diagonal per-user precoding and D = diag(1/√ρ_k).
pub fn ul_received<R: Rng + ?Sized>(
    channels: &[BeamspaceChannel],
    combiners: &[BeamSelector],
    precoders: &[BeamSelector],
    cfg: &LinkConfig,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    let k_users = cfg.n_users;
    if channels.len() != k_users || combiners.len() != k_users || precoders.len() != k_users {
        return Err(Error::Config(format!(
            "channel/combiner/precoder counts must all equal K = {k_users}"
        )));
    }
    let n_rx = channels[0].n_rx();
    for (i, ch) in channels.iter().enumerate() {
        if ch.n_rx() != n_rx {
            return Err(Error::Config(format!(
                "channel {i} has {} receive beams, expected {n_rx}",
                ch.n_rx()
            )));
        }
        if precoders[i].length != ch.n_tx() {
            return Err(Error::Config(format!(
                "precoder {i} length {} does not match {} transmit beams",
                precoders[i].length,
                ch.n_tx()
            )));
        }
        if combiners[i].length != n_rx {
            return Err(Error::Config(format!(
                "combiner {i} length {} does not match {n_rx} receive beams",
                combiners[i].length
            )));
        }
    }
    let v = noise_vector(n_rx, cfg.noise_var, rng);
    let mut y = DVector::zeros(k_users);
    for j in 0..k_users {
        let row = combiners[j].index;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..k_users {
            let gain = cfg.pilots[i] / cfg.path_loss[i].sqrt();
            acc += channels[i].entries[(row, precoders[i].index)] * gain;
        }
        y[j] = acc + v[row];
    }
    Ok(y)
}

/// Noise variance achieving `snr_db` against a reference received power
/// (mean pilot power of the selected beam, N_t·N_r/L for unit-variance
/// gains).
pub fn snr_to_noise_var(snr_db: f64, ref_power: f64) -> f64 {
    ref_power * 10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        beamspace_channel, dft_matrix, virtual_angle, ArrayGeometry, PathState, UserChannel,
    };
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn single_entry_channel(n_r: usize, n_t: usize, v: usize, c: usize) -> BeamspaceChannel {
        let mut m = DMatrix::zeros(n_r, n_t);
        m[(v, c)] = Complex64::new(1.0, 0.0);
        BeamspaceChannel { entries: m }
    }

    #[test]
    fn select_beams_single_entry() {
        let hb = single_entry_channel(8, 4, 3, 1);
        let (rx, tx) = select_beams(&hb).unwrap();
        assert_eq!((rx.index, tx.index), (3, 1));
    }

    #[test]
    fn select_beams_tie_breaks_toward_smallest_row() {
        let mut m = DMatrix::zeros(8, 4);
        m[(0, 2)] = Complex64::new(0.0, 2.0);
        m[(5, 2)] = Complex64::new(2.0, 0.0);
        let (rx, tx) = select_beams(&BeamspaceChannel { entries: m }).unwrap();
        assert_eq!((rx.index, tx.index), (0, 2));
    }

    #[test]
    fn select_beams_matches_exhaustive_scan() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = DMatrix::from_fn(16, 8, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let hb = BeamspaceChannel { entries: m.clone() };
            let (rx, tx) = select_beams(&hb).unwrap();
            let mut best = (0, 0);
            for v in 0..16 {
                for c in 0..8 {
                    if m[(v, c)].norm() > m[best].norm() {
                        best = (v, c);
                    }
                }
            }
            assert_eq!((rx.index, tx.index), best);
        }
    }

    #[test]
    fn select_beams_rejects_zero_matrix() {
        let hb = BeamspaceChannel {
            entries: DMatrix::zeros(4, 4),
        };
        assert!(matches!(
            select_beams(&hb),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn dl_received_extracts_selected_entry_when_noiseless() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut m = DMatrix::zeros(8, 16);
        m[(2, 5)] = Complex64::new(0.3, -0.7);
        let hb = BeamspaceChannel { entries: m };
        let cfg = LinkConfig::uniform(1, 0.0).unwrap();
        let y = dl_received(
            0,
            &[hb],
            &[BeamSelector::new(5, 16).unwrap()],
            &BeamSelector::new(2, 8).unwrap(),
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert!((y - Complex64::new(0.3, -0.7)).norm() < 1e-15);
    }

    #[test]
    fn dl_received_zero_channel_noise_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let hb = BeamspaceChannel {
            entries: DMatrix::zeros(8, 16),
        };
        let cfg = LinkConfig::uniform(1, 0.8).unwrap();
        let combiner = BeamSelector::new(4, 8).unwrap();
        let precoder = BeamSelector::new(0, 16).unwrap();
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let y = dl_received(
                0,
                std::slice::from_ref(&hb),
                std::slice::from_ref(&precoder),
                &combiner,
                &cfg,
                &mut rng,
            )
            .unwrap();
            acc += y.norm_sqr();
        }
        let var = acc / n as f64;
        assert!((var - 0.8).abs() < 0.05 * 0.8, "sample variance {var}");
    }

    #[test]
    fn dl_interference_vanishes_on_zero_column() {
        let mut m = DMatrix::zeros(4, 6);
        m[(1, 2)] = Complex64::new(1.0, 1.0);
        let hb = BeamspaceChannel { entries: m };
        let combiner = BeamSelector::new(1, 4).unwrap();
        let p1 = BeamSelector::new(2, 6).unwrap();
        let p2 = BeamSelector::new(5, 6).unwrap(); // zero column of H_b
        let cfg1 = LinkConfig::uniform(1, 0.4).unwrap();
        let cfg2 = LinkConfig::uniform(2, 0.4).unwrap();
        let mut rng1 = ChaCha12Rng::seed_from_u64(77);
        let mut rng2 = ChaCha12Rng::seed_from_u64(77);
        let y1 = dl_received(
            0,
            std::slice::from_ref(&hb),
            &[p1],
            &combiner,
            &cfg1,
            &mut rng1,
        )
        .unwrap();
        let y2 = dl_received(
            0,
            &[hb.clone(), hb.clone()],
            &[p1, p2],
            &combiner,
            &cfg2,
            &mut rng2,
        )
        .unwrap();
        assert!((y1 - y2).norm() < 1e-15);
    }

    #[test]
    fn dl_is_linear_in_pilots_without_noise() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let m = DMatrix::from_fn(4, 6, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let hb = BeamspaceChannel { entries: m };
        let combiner = BeamSelector::new(2, 4).unwrap();
        let precoders = [
            BeamSelector::new(1, 6).unwrap(),
            BeamSelector::new(4, 6).unwrap(),
        ];
        let s1 = Complex64::from_polar(1.0, 0.4);
        let s2 = Complex64::from_polar(1.0, -1.2);
        let cfg = LinkConfig::new(2, 0.0, vec![1.0; 2], vec![s1, s2]).unwrap();
        let y_joint = dl_received(
            0,
            &[hb.clone(), hb.clone()],
            &precoders,
            &combiner,
            &cfg,
            &mut rng,
        )
        .unwrap();
        let row = combiner.index;
        let expected =
            hb.entries[(row, precoders[0].index)] * s1 + hb.entries[(row, precoders[1].index)] * s2;
        assert!((y_joint - expected).norm() < 1e-12);
    }

    #[test]
    fn ul_single_user_equals_dl_for_same_seed() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let m = DMatrix::from_fn(16, 8, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let hb = BeamspaceChannel { entries: m };
        let combiner = BeamSelector::new(7, 16).unwrap();
        let precoder = BeamSelector::new(3, 8).unwrap();
        let cfg = LinkConfig::uniform(1, 0.5).unwrap();
        let mut rng_dl = ChaCha12Rng::seed_from_u64(101);
        let mut rng_ul = ChaCha12Rng::seed_from_u64(101);
        let y_dl = dl_received(
            0,
            std::slice::from_ref(&hb),
            std::slice::from_ref(&precoder),
            &combiner,
            &cfg,
            &mut rng_dl,
        )
        .unwrap();
        let y_ul = ul_received(
            std::slice::from_ref(&hb),
            &[combiner],
            &[precoder],
            &cfg,
            &mut rng_ul,
        )
        .unwrap();
        assert!((y_ul[0] - y_dl).norm() < 1e-12);
    }

    #[test]
    fn ul_orthogonal_on_grid_users_do_not_interfere() {
        let n_r = 16;
        let n_t = 8;
        let rx = ArrayGeometry::half_wavelength(n_r).unwrap();
        let tx = ArrayGeometry::half_wavelength(n_t).unwrap();
        let u_rx = dft_matrix(n_r);
        let u_tx = dft_matrix(n_t);
        let beams = [(10usize, 5usize), (12usize, 6usize)];
        let alphas = [Complex64::new(0.9, 0.1), Complex64::new(-0.2, 0.6)];
        let mut channels = Vec::new();
        let mut combiners = Vec::new();
        let mut precoders = Vec::new();
        for (u, &(v, c)) in beams.iter().enumerate() {
            let chan = UserChannel::new(vec![PathState {
                alpha_re: alphas[u].re,
                alpha_im: alphas[u].im,
                theta_a: (virtual_angle(n_r, v) / 0.5).asin(),
                theta_d: (virtual_angle(n_t, c) / 0.5).asin(),
            }])
            .unwrap();
            channels.push(beamspace_channel(&rx, &tx, &chan, &u_rx, &u_tx).unwrap());
            combiners.push(BeamSelector::new(v, n_r).unwrap());
            precoders.push(BeamSelector::new(c, n_t).unwrap());
        }
        let cfg = LinkConfig::uniform(2, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let y = ul_received(&channels, &combiners, &precoders, &cfg, &mut rng).unwrap();
        let scale = ((n_r * n_t) as f64).sqrt();
        for (u, alpha) in alphas.iter().enumerate() {
            assert!(
                (y[u] - alpha * scale).norm() < 1e-9,
                "user {u}: {} vs {}",
                y[u],
                alpha * scale
            );
        }
    }

    #[test]
    fn ul_zero_channels_yield_distinct_noise_per_beam() {
        let hb = BeamspaceChannel {
            entries: DMatrix::zeros(16, 8),
        };
        let cfg = LinkConfig::uniform(2, 1.0).unwrap();
        let combiners = [
            BeamSelector::new(2, 16).unwrap(),
            BeamSelector::new(9, 16).unwrap(),
        ];
        let precoders = [
            BeamSelector::new(0, 8).unwrap(),
            BeamSelector::new(1, 8).unwrap(),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let y = ul_received(
            &[hb.clone(), hb.clone()],
            &combiners,
            &precoders,
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert!((y[0] - y[1]).norm() > 1e-9);
        // Shared beam index means the same noise sample.
        let shared = [
            BeamSelector::new(2, 16).unwrap(),
            BeamSelector::new(2, 16).unwrap(),
        ];
        let y2 = ul_received(
            &[hb.clone(), hb.clone()],
            &shared,
            &precoders,
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert!((y2[0] - y2[1]).norm() < 1e-15);
    }

    #[test]
    fn snr_to_noise_var_decade_arithmetic() {
        assert_relative_eq!(snr_to_noise_var(0.0, 1.0), 1.0);
        assert_relative_eq!(snr_to_noise_var(20.0, 1.0), 0.01);
        assert_relative_eq!(snr_to_noise_var(20.0, 128.0), 1.28);
    }

    #[test]
    fn one_hot_application_matches_full_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        for _ in 0..20 {
            let m = DMatrix::from_fn(8, 16, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let hb = BeamspaceChannel { entries: m.clone() };
            let w = BeamSelector::new(rng.gen_range(0..8), 8).unwrap();
            let p = BeamSelector::new(rng.gen_range(0..16), 16).unwrap();
            let cfg = LinkConfig::uniform(1, 0.0).unwrap();
            let y = dl_received(0, std::slice::from_ref(&hb), &[p], &w, &cfg, &mut rng).unwrap();
            let full = (w.to_vector().adjoint() * &m * p.to_vector())[(0, 0)];
            assert!((y - full).norm() < 1e-12);
        }
    }
}
