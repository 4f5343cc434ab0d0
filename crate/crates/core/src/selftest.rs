//! Fast invariant suite runnable from the CLI (`beamtrack selftest`).
//!
//! The checks mirror the heavier test suite: DFT unitarity, unscented
//! moment matching, agreement of both filters with a closed-form Kalman
//! recursion on an affine model, and the Dirichlet-sum identity for
//! beamspace entries.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::channel::{
    beamspace_element, dft_matrix, dirichlet, process_noise_cov, steering_vector, virtual_angle,
    ArrayGeometry, EvolutionParams,
};
use crate::filter::{
    ekf_step, sigma_points, ukf_predict, ukf_update, FilterState, LinearObservation, UtParams,
};

/// Outcome of one self-test check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Closed-form linear Kalman recursion, kept deliberately separate from
/// the UKF/EKF implementations it validates.
pub mod reference_kalman {
    use nalgebra::{DMatrix, DVector};

    #[derive(Debug, Clone)]
    pub struct Model {
        pub a: DMatrix<f64>,
        pub q: DMatrix<f64>,
        pub h: DMatrix<f64>,
        pub r: DMatrix<f64>,
    }

    #[derive(Debug, Clone)]
    pub struct State {
        pub mean: DVector<f64>,
        pub cov: DMatrix<f64>,
    }

    /// One predict-update cycle of the textbook Kalman filter.
    pub fn step(model: &Model, state: &State, y: &DVector<f64>) -> State {
        let pred_mean = &model.a * &state.mean;
        let pred_cov = &model.a * &state.cov * model.a.transpose() + &model.q;
        let s = &model.h * &pred_cov * model.h.transpose() + &model.r;
        let gain = &pred_cov
            * model.h.transpose()
            * s.try_inverse().expect("innovation covariance invertible");
        let mean = &pred_mean + &gain * (y - &model.h * &pred_mean);
        let cov = &pred_cov - &gain * &model.h * &pred_cov;
        State {
            mean,
            cov: (&cov + cov.transpose()) * 0.5,
        }
    }
}

fn check_unitarity() -> CheckResult {
    let mut worst: f64 = 0.0;
    for n in [8usize, 16] {
        let u = dft_matrix(n);
        let gram = &u * u.adjoint();
        let eye = DMatrix::identity(n, n);
        let dev = (gram - eye).iter().map(|e| e.norm()).fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    CheckResult {
        name: "dft-unitarity",
        passed: worst <= 1e-12,
        detail: format!("max |UUᴴ − I| = {worst:.2e} (tol 1e-12)"),
    }
}

fn check_moment_matching() -> CheckResult {
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    let mut worst_mean: f64 = 0.0;
    let mut worst_cov: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.gen_range(1..=12);
        let a = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        let cov = &a * a.transpose() / m as f64;
        let mean = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let state = FilterState::new(mean.clone(), cov.clone()).unwrap();
        for p in [
            UtParams::new(0.3, 1.0).unwrap(),
            UtParams::new(1.0, 0.0).unwrap(),
        ] {
            let s = sigma_points(&state, &p).unwrap();
            worst_mean = worst_mean.max((s.weighted_mean() - &mean).amax());
        }
        let s = sigma_points(&state, &UtParams::new(1.0, 0.0).unwrap()).unwrap();
        let mut recon = DMatrix::zeros(m, m);
        for (pt, w) in s.points.iter().zip(&s.w_cov) {
            let d = pt - &mean;
            recon += &d * d.transpose() * *w;
        }
        worst_cov = worst_cov.max((recon - &cov).amax());
    }
    CheckResult {
        name: "ut-moment-matching",
        passed: worst_mean < 1e-12 && worst_cov < 1e-10,
        detail: format!(
            "mean dev {worst_mean:.2e} (tol 1e-12), cov dev {worst_cov:.2e} (tol 1e-10)"
        ),
    }
}

fn check_affine_oracle() -> CheckResult {
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    let evo = EvolutionParams::new(0.9, 0.01, 0.02).unwrap();
    let q = process_noise_cov(&evo, 1);
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.9, 1.0, 1.0]));
    let h = DMatrix::from_fn(2, 4, |r, c| ((1 + r + 2 * c) as f64 * 0.31).sin());
    let r = DMatrix::identity(2, 2) * 0.4;
    let model = LinearObservation::new(h.clone(), r.clone()).unwrap();
    let oracle_model = reference_kalman::Model {
        a,
        q: q.clone(),
        h,
        r: r.clone(),
    };
    let p = UtParams::new(0.7, 0.5).unwrap();

    let init_mean = DVector::from_vec(vec![0.4, -0.2, 1.1, 2.2]);
    let init_cov = DMatrix::identity(4, 4) * 0.3;
    let mut ukf = FilterState::new(init_mean.clone(), init_cov.clone()).unwrap();
    let mut ekf = ukf.clone();
    let mut oracle = reference_kalman::State {
        mean: init_mean,
        cov: init_cov,
    };

    let mut worst_ukf: f64 = 0.0;
    let mut worst_ekf: f64 = 0.0;
    for _ in 0..20 {
        let y = DVector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0));
        let pred = ukf_predict(&ukf, &evo, &q, &p).unwrap();
        let sigma = sigma_points(&pred, &p).unwrap();
        ukf = ukf_update(&pred, &sigma, &model, &y, &p).unwrap();
        ekf = ekf_step(&ekf, &evo, &q, &model, &y, &r).unwrap();
        oracle = reference_kalman::step(&oracle_model, &oracle, &y);
        worst_ukf = worst_ukf.max((ukf.mean.clone() - &oracle.mean).amax());
        worst_ukf = worst_ukf.max((ukf.cov.clone() - &oracle.cov).amax());
        worst_ekf = worst_ekf.max((ekf.mean.clone() - &oracle.mean).amax());
        worst_ekf = worst_ekf.max((ekf.cov.clone() - &oracle.cov).amax());
    }
    CheckResult {
        name: "affine-kalman-oracle",
        passed: worst_ukf < 1e-8 && worst_ekf < 1e-6,
        detail: format!("UKF dev {worst_ukf:.2e} (tol 1e-8), EKF dev {worst_ekf:.2e} (tol 1e-6)"),
    }
}

fn check_beamspace_element() -> CheckResult {
    let mut rng = ChaCha12Rng::seed_from_u64(29);
    let n_r = 16;
    let n_t = 8;
    let rx = ArrayGeometry::half_wavelength(n_r).unwrap();
    let tx = ArrayGeometry::half_wavelength(n_t).unwrap();
    let u_rx = dft_matrix(n_r);
    let u_tx = dft_matrix(n_t);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta_a = rng.gen_range(0.0..std::f64::consts::PI);
        let theta_d = rng.gen_range(0.0..std::f64::consts::PI);
        let v = rng.gen_range(0..n_r);
        let c = rng.gen_range(0..n_t);
        let outer = &u_rx
            * steering_vector(&rx, theta_a)
            * (&u_tx * steering_vector(&tx, theta_d)).adjoint();
        let brute = outer[(v, c)] * ((n_t * n_r) as f64);
        let f = beamspace_element(
            0.5 * theta_a.sin(),
            0.5 * theta_d.sin(),
            virtual_angle(n_t, c),
            virtual_angle(n_r, v),
            n_t,
            n_r,
        );
        worst = worst.max((f - brute).norm());
    }
    let peaks_ok = [2usize, 4, 8, 16]
        .iter()
        .all(|&n| dirichlet(n, 0.0) == n as f64);
    CheckResult {
        name: "beamspace-element-identity",
        passed: worst < 1e-9 && peaks_ok,
        detail: format!(
            "max |f − brute| = {worst:.2e} (tol 1e-9), Dirichlet peaks exact: {peaks_ok}"
        ),
    }
}

/// Run every check and return the reports in order.
pub fn run() -> Vec<CheckResult> {
    vec![
        check_unitarity(),
        check_moment_matching(),
        check_affine_oracle(),
        check_beamspace_element(),
    ]
}
