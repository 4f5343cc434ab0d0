//! Monte Carlo tracking harness: per-episode truth evolution, pilot
//! synthesis, filtering, and MSE aggregation across runs.
//!
//! Episodes are independent: each derives its own RNG stream from the
//! master seed and run index, so parallel and sequential execution produce
//! identical results. When both filters are enabled they consume the same
//! truth trajectory and noise draws (common random numbers).

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    beamspace_channel, dft_matrix, draw_initial_channel, evolve, process_noise_cov, ArrayGeometry,
    EvolutionParams, UserChannel, STATE_PER_PATH,
};
use crate::error::Error;
use crate::filter::{
    ekf_step, optimize_spread, sigma_points, split_complex, ukf_predict, ukf_update, DlObservation,
    FilterState, ObservationModel, UlObservation, UlUserObservation, UtParams,
};
use crate::link::{dl_received, select_beams, snr_to_noise_var, ul_received, LinkConfig};
use crate::Result;

/// Transmission direction of the tracked pilot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dl,
    Ul,
}

/// Which filters an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterSel {
    Ukf,
    Ekf,
    Both,
}

impl FilterSel {
    pub fn kinds(&self) -> &'static [FilterKind] {
        match self {
            FilterSel::Ukf => &[FilterKind::Ukf],
            FilterSel::Ekf => &[FilterKind::Ekf],
            FilterSel::Both => &[FilterKind::Ukf, FilterKind::Ekf],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Ukf,
    Ekf,
}

impl FilterKind {
    pub fn label(&self) -> &'static str {
        match self {
            FilterKind::Ukf => "ukf",
            FilterKind::Ekf => "ekf",
        }
    }
}

/// Full experiment description. Defaults mirror the standard DL and UL
/// configurations (16-beam base station, 8-beam users, ρ = 0.99, 20 slots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mode: Mode,
    /// Carrier frequency in GHz; recorded in outputs, never used
    /// numerically (only d/λ enters the model).
    pub fc_ghz: f64,
    pub n_bs: usize,
    pub n_ue: usize,
    /// Antenna spacing over wavelength for both arrays.
    pub spacing_ratio: f64,
    pub k_users: usize,
    /// Resolvable paths for the tracked user (DL); uplink forces 1.
    pub paths_tracked: usize,
    /// Per-slot angle random-walk variance in degrees², same for AoA and
    /// AoD (0.0625 means a 0.25° per-slot step). Angles and reported MSE
    /// stay in radians.
    pub sigma2: f64,
    pub rho: f64,
    pub snr_db: f64,
    pub n_slots: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub filter: FilterSel,
    pub ut_gammas: Vec<f64>,
    pub ut_kappas: Vec<f64>,
}

impl ScenarioConfig {
    /// Downlink defaults: σ² = (0.25)² deg², SNR 20 dB, single user.
    pub fn dl_default() -> Self {
        Self {
            mode: Mode::Dl,
            fc_ghz: 28.0,
            n_bs: 16,
            n_ue: 8,
            spacing_ratio: 0.5,
            k_users: 1,
            paths_tracked: 1,
            sigma2: 0.0625,
            rho: 0.99,
            snr_db: 20.0,
            n_slots: 20,
            n_runs: 1000,
            seed: 1,
            filter: FilterSel::Ukf,
            ut_gammas: default_gammas(),
            ut_kappas: default_kappas(),
        }
    }

    /// Uplink defaults: σ² = (0.35)² deg², SNR 0 dB, single path per user.
    pub fn ul_default() -> Self {
        Self {
            mode: Mode::Ul,
            sigma2: 0.1225,
            snr_db: 0.0,
            ..Self::dl_default()
        }
    }

    /// Per-slot angle variance in rad², converted from the configured
    /// degrees² value.
    pub fn sigma2_rad(&self) -> f64 {
        let d2r = std::f64::consts::PI / 180.0;
        self.sigma2 * d2r * d2r
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Dl => Self::dl_default(),
            Mode::Ul => Self::ul_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: usize) -> Result<()> {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
            Ok(())
        }
        positive("n_bs", self.n_bs)?;
        positive("n_ue", self.n_ue)?;
        positive("k_users", self.k_users)?;
        positive("paths_tracked", self.paths_tracked)?;
        positive("n_slots", self.n_slots)?;
        positive("n_runs", self.n_runs)?;
        if self.spacing_ratio <= 0.0 || !self.spacing_ratio.is_finite() {
            return Err(Error::InvalidParameter(
                "spacing_ratio must be positive and finite".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if self.sigma2 < 0.0 || !self.sigma2.is_finite() {
            return Err(Error::InvalidParameter(
                "sigma2 must be non-negative and finite".into(),
            ));
        }
        if self.snr_db.is_nan() {
            return Err(Error::InvalidParameter("snr_db must not be NaN".into()));
        }
        if !self.fc_ghz.is_finite() || self.fc_ghz <= 0.0 {
            return Err(Error::InvalidParameter(
                "fc_ghz must be positive and finite".into(),
            ));
        }
        if self.mode == Mode::Ul && self.paths_tracked != 1 {
            return Err(Error::InvalidParameter(format!(
                "paths_tracked must be 1 in uplink mode, got {}",
                self.paths_tracked
            )));
        }
        if self.ut_gammas.is_empty() || self.ut_kappas.is_empty() {
            return Err(Error::InvalidParameter(
                "ut_gammas and ut_kappas must be non-empty".into(),
            ));
        }
        for g in &self.ut_gammas {
            if !(*g > 0.0 && *g <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "ut_gammas entries must lie in (0, 1], got {g}"
                )));
            }
        }
        for k in &self.ut_kappas {
            if *k < 0.0 || !k.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "ut_kappas entries must be non-negative, got {k}"
                )));
            }
        }
        Ok(())
    }

    /// Tracked paths of the joint filter state: L in DL, K single-path
    /// users in UL.
    pub fn tracked_paths(&self) -> usize {
        match self.mode {
            Mode::Dl => self.paths_tracked,
            Mode::Ul => self.k_users,
        }
    }

    /// Candidate (γ, κ) cross product, keeping only candidates with
    /// Λ+m > 0 for the tracked state dimension.
    pub fn ut_grid(&self) -> Result<Vec<UtParams>> {
        let m = STATE_PER_PATH * self.tracked_paths();
        let mut grid = Vec::with_capacity(self.ut_gammas.len() * self.ut_kappas.len());
        for &g in &self.ut_gammas {
            for &k in &self.ut_kappas {
                let p = UtParams::new(g, k)?;
                if p.scaled_dim(m) > 0.0 {
                    grid.push(p);
                }
            }
        }
        if grid.is_empty() {
            return Err(Error::InvalidParameter(
                "no sigma-spread candidate satisfies Λ+m > 0".into(),
            ));
        }
        Ok(grid)
    }

    /// Stable textual form used for hashing and output headers.
    pub fn canonical(&self) -> String {
        let mode = match self.mode {
            Mode::Dl => "dl",
            Mode::Ul => "ul",
        };
        let filter = match self.filter {
            FilterSel::Ukf => "ukf",
            FilterSel::Ekf => "ekf",
            FilterSel::Both => "both",
        };
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "mode={mode} fc_ghz={} n_bs={} n_ue={} spacing_ratio={} k_users={} \
             paths_tracked={} sigma2={} rho={} snr_db={} n_slots={} n_runs={} seed={} \
             filter={filter} ut_gammas=[{}] ut_kappas=[{}]",
            self.fc_ghz,
            self.n_bs,
            self.n_ue,
            self.spacing_ratio,
            self.k_users,
            self.paths_tracked,
            self.sigma2,
            self.rho,
            self.snr_db,
            self.n_slots,
            self.n_runs,
            self.seed,
            list(&self.ut_gammas),
            list(&self.ut_kappas),
        )
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical().as_bytes())
    }
}

pub fn default_gammas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn default_kappas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 3.0]
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-run RNG seed derived from the master seed; independent of execution
/// order so parallel and sequential sweeps agree.
pub fn episode_seed(master: u64, run_index: u64) -> u64 {
    splitmix64(master ^ splitmix64(run_index.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1)))
}

/// Squared errors recorded after the measurement update of one slot, one
/// entry per tracked path.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotErrors {
    pub aoa_sq: Vec<f64>,
    pub aod_sq: Vec<f64>,
    pub gain_sq: Vec<f64>,
}

/// Trajectory of one filter across an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub kind: FilterKind,
    /// Posterior means per slot, packed like the truth state.
    pub tracked: Vec<DVector<f64>>,
    pub errors: Vec<SlotErrors>,
}

/// One episode's truth, tracked trajectories, and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub config_hash: u64,
    pub n_slots: usize,
    pub tracked_paths: usize,
    /// (γ, κ) chosen at the first slot when the UKF ran.
    pub chosen_ut: Option<(f64, f64)>,
    /// True packed states per slot.
    pub truth: Vec<DVector<f64>>,
    pub filters: Vec<FilterRun>,
}

impl RunResult {
    pub fn filter_run(&self, kind: FilterKind) -> Option<&FilterRun> {
        self.filters.iter().find(|f| f.kind == kind)
    }

    /// Bit-level hash of the truth trajectory; equal hashes mean identical
    /// channel and noise realizations.
    pub fn truth_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.truth.len() * self.truth[0].len() * 8);
        for state in &self.truth {
            for v in state.iter() {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        fnv1a(&bytes)
    }
}

fn squared_errors(truth: &DVector<f64>, tracked: &DVector<f64>) -> SlotErrors {
    let n_paths = truth.len() / STATE_PER_PATH;
    let mut aoa_sq = Vec::with_capacity(n_paths);
    let mut aod_sq = Vec::with_capacity(n_paths);
    let mut gain_sq = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let b = STATE_PER_PATH * p;
        let dre = tracked[b] - truth[b];
        let dim = tracked[b + 1] - truth[b + 1];
        let dd = tracked[b + 2] - truth[b + 2];
        let da = tracked[b + 3] - truth[b + 3];
        gain_sq.push(dre * dre + dim * dim);
        aod_sq.push(dd * dd);
        aoa_sq.push(da * da);
    }
    SlotErrors {
        aoa_sq,
        aod_sq,
        gain_sq,
    }
}

struct UkfTracker {
    state: FilterState,
    params: UtParams,
    optimized: bool,
}

struct EkfTracker {
    /// One joint filter in DL, one 4-state filter per user in UL.
    states: Vec<FilterState>,
}

/// Simulate one tracking episode. Draws the initial channel, fixes beams
/// from the slot-0 beamspace channel, optimizes the sigma spread on the
/// first pilot, then alternates truth evolution and filter updates for
/// `n_slots` slots.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let bs = ArrayGeometry::new(cfg.n_bs, cfg.spacing_ratio)?;
    let ue = ArrayGeometry::new(cfg.n_ue, cfg.spacing_ratio)?;
    let (rx_geom, tx_geom) = match cfg.mode {
        Mode::Dl => (ue, bs),
        Mode::Ul => (bs, ue),
    };
    let u_rx = dft_matrix(rx_geom.n_elements);
    let u_tx = dft_matrix(tx_geom.n_elements);

    // Initial channels: the tracked user first (DL) or all K users (UL);
    // DL interferers carry a single path each.
    let k_users = cfg.k_users;
    let mut users: Vec<UserChannel> = Vec::with_capacity(k_users);
    for u in 0..k_users {
        let paths = match cfg.mode {
            Mode::Dl if u == 0 => cfg.paths_tracked,
            _ => 1,
        };
        users.push(draw_initial_channel(paths, &mut rng));
    }

    // Beam selection from the slot-0 beamspace channels, fixed thereafter.
    let mut combiners = Vec::with_capacity(k_users);
    let mut precoders = Vec::with_capacity(k_users);
    for chan in &users {
        let hb = beamspace_channel(&rx_geom, &tx_geom, chan, &u_rx, &u_tx)?;
        let (rx_sel, tx_sel) = select_beams(&hb)?;
        combiners.push(rx_sel);
        precoders.push(tx_sel);
    }

    let sigma2_rad = cfg.sigma2_rad();
    let evo = EvolutionParams::new(cfg.rho, sigma2_rad, sigma2_rad)?;
    let ref_power = (cfg.n_bs * cfg.n_ue) as f64 / cfg.tracked_paths() as f64;
    let noise_var = snr_to_noise_var(cfg.snr_db, ref_power);
    let link = LinkConfig::uniform(k_users, noise_var)?;
    let path_loss = vec![1.0; k_users];

    // Observation models for the tracked state.
    let joint_model: Box<dyn ObservationModel> = match cfg.mode {
        Mode::Dl => Box::new(DlObservation::new(
            &u_rx,
            &u_tx,
            rx_geom,
            tx_geom,
            &combiners[0],
            &precoders[0],
            cfg.paths_tracked,
            noise_var,
        )?),
        Mode::Ul => Box::new(UlObservation::new(
            &u_rx, &u_tx, rx_geom, tx_geom, &combiners, &precoders, &path_loss, noise_var,
        )?),
    };
    // Separate per-user views for the UL baseline.
    let user_models: Vec<UlUserObservation> = match cfg.mode {
        Mode::Ul => (0..k_users)
            .map(|k| {
                UlUserObservation::new(
                    &u_rx,
                    &u_tx,
                    rx_geom,
                    tx_geom,
                    &combiners[k],
                    &precoders[k],
                    path_loss[k],
                    noise_var,
                )
            })
            .collect::<Result<_>>()?,
        Mode::Dl => Vec::new(),
    };

    let tracked_paths = cfg.tracked_paths();
    let joint_q = process_noise_cov(&evo, tracked_paths);
    let user_q = process_noise_cov(&evo, 1);
    let grid = cfg.ut_grid()?;

    // Perfect initialization at slot 0; one-slot process noise as the
    // initial uncertainty.
    let truth_state = |users: &[UserChannel]| -> DVector<f64> {
        match cfg.mode {
            Mode::Dl => users[0].to_state_vector(),
            Mode::Ul => {
                let mut v = DVector::zeros(STATE_PER_PATH * users.len());
                for (i, u) in users.iter().enumerate() {
                    v.rows_mut(STATE_PER_PATH * i, STATE_PER_PATH)
                        .copy_from(&u.to_state_vector());
                }
                v
            }
        }
    };
    let x0 = truth_state(&users);

    let kinds = cfg.filter.kinds();
    let mut ukf = kinds.contains(&FilterKind::Ukf).then(|| UkfTracker {
        state: FilterState::new(x0.clone(), joint_q.clone()).expect("dimension match"),
        params: UtParams::default(),
        optimized: false,
    });
    let mut ekf = kinds.contains(&FilterKind::Ekf).then(|| EkfTracker {
        states: match cfg.mode {
            Mode::Dl => vec![FilterState::new(x0.clone(), joint_q.clone()).expect("dim")],
            Mode::Ul => (0..k_users)
                .map(|k| {
                    let sub = x0.rows(STATE_PER_PATH * k, STATE_PER_PATH).into_owned();
                    FilterState::new(sub, user_q.clone()).expect("dim")
                })
                .collect(),
        },
    });

    let mut truth = Vec::with_capacity(cfg.n_slots);
    let mut ukf_run = FilterRun {
        kind: FilterKind::Ukf,
        tracked: Vec::with_capacity(cfg.n_slots),
        errors: Vec::with_capacity(cfg.n_slots),
    };
    let mut ekf_run = FilterRun {
        kind: FilterKind::Ekf,
        tracked: Vec::with_capacity(cfg.n_slots),
        errors: Vec::with_capacity(cfg.n_slots),
    };
    let mut chosen_ut = None;

    for slot in 1..=cfg.n_slots {
        // Truth evolution and pilot synthesis; the draws below never depend
        // on which filters are enabled.
        for u in users.iter_mut() {
            *u = evolve(u, &evo, &mut rng);
        }
        let channels = users
            .iter()
            .map(|u| beamspace_channel(&rx_geom, &tx_geom, u, &u_rx, &u_tx))
            .collect::<Result<Vec<_>>>()?;
        let y = match cfg.mode {
            Mode::Dl => {
                let y = dl_received(0, &channels, &precoders, &combiners[0], &link, &mut rng)?;
                split_complex(&[y])
            }
            Mode::Ul => {
                let y = ul_received(&channels, &combiners, &precoders, &link, &mut rng)?;
                split_complex(y.as_slice())
            }
        };
        let x_true = truth_state(&users);

        if let Some(tracker) = ukf.as_mut() {
            let step = (|| -> Result<()> {
                let pred = ukf_predict(&tracker.state, &evo, &joint_q, &tracker.params)?;
                if !tracker.optimized {
                    tracker.params = optimize_spread(&pred, joint_model.as_ref(), &y, &grid)?;
                    tracker.optimized = true;
                    chosen_ut = Some((tracker.params.gamma, tracker.params.kappa));
                }
                let sigma = sigma_points(&pred, &tracker.params)?;
                tracker.state =
                    ukf_update(&pred, &sigma, joint_model.as_ref(), &y, &tracker.params)?;
                tracker.state.health_check()
            })();
            step.map_err(|e| annotate(e, slot, FilterKind::Ukf))?;
            ukf_run.tracked.push(tracker.state.mean.clone());
            ukf_run
                .errors
                .push(squared_errors(&x_true, &tracker.state.mean));
        }

        if let Some(tracker) = ekf.as_mut() {
            let step = (|| -> Result<()> {
                match cfg.mode {
                    Mode::Dl => {
                        let next = ekf_step(
                            &tracker.states[0],
                            &evo,
                            &joint_q,
                            joint_model.as_ref(),
                            &y,
                            joint_model.noise_cov(),
                        )?;
                        next.health_check()?;
                        tracker.states[0] = next;
                    }
                    Mode::Ul => {
                        for k in 0..k_users {
                            let yk = DVector::from_vec(vec![y[k], y[k_users + k]]);
                            let model = &user_models[k];
                            let next = ekf_step(
                                &tracker.states[k],
                                &evo,
                                &user_q,
                                model,
                                &yk,
                                model.noise_cov(),
                            )?;
                            next.health_check()?;
                            tracker.states[k] = next;
                        }
                    }
                }
                Ok(())
            })();
            step.map_err(|e| annotate(e, slot, FilterKind::Ekf))?;
            let mean = match cfg.mode {
                Mode::Dl => tracker.states[0].mean.clone(),
                Mode::Ul => {
                    let mut v = DVector::zeros(STATE_PER_PATH * k_users);
                    for (k, s) in tracker.states.iter().enumerate() {
                        v.rows_mut(STATE_PER_PATH * k, STATE_PER_PATH)
                            .copy_from(&s.mean);
                    }
                    v
                }
            };
            ekf_run.errors.push(squared_errors(&x_true, &mean));
            ekf_run.tracked.push(mean);
        }

        truth.push(x_true);
    }

    let mut filters = Vec::new();
    if ukf.is_some() {
        filters.push(ukf_run);
    }
    if ekf.is_some() {
        filters.push(ekf_run);
    }
    Ok(RunResult {
        seed,
        config_hash: cfg.hash(),
        n_slots: cfg.n_slots,
        tracked_paths,
        chosen_ut,
        truth,
        filters,
    })
}

fn annotate(e: Error, slot: usize, kind: FilterKind) -> Error {
    match e {
        Error::Numerical { msg, .. } => Error::Numerical {
            slot: Some(slot),
            msg: format!("{}: {msg}", kind.label()),
        },
        other => other,
    }
}

/// Per-slot mean and standard error of a squared-error statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotStat {
    pub mse: f64,
    pub stderr: f64,
}

fn slot_stat(values: &[f64]) -> SlotStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return SlotStat {
            mse: mean,
            stderr: 0.0,
        };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    SlotStat {
        mse: mean,
        stderr: (var / n).sqrt(),
    }
}

/// Aggregated MSE curves for one filter: per-slot AoA, AoD, and
/// gain-modulus error, plus the per-path gain breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurves {
    pub n_runs: usize,
    pub aoa: Vec<SlotStat>,
    pub aod: Vec<SlotStat>,
    pub gain: Vec<SlotStat>,
    /// Indexed `[path][slot]`; path 0 is the LoS path in multipath runs.
    pub gain_per_path: Vec<Vec<SlotStat>>,
}

/// Average squared tracking errors across runs, slot by slot. AoA and AoD
/// are reported separately; multi-path errors average over paths within a
/// run before averaging across runs.
pub fn angle_mse(results: &[RunResult], kind: FilterKind) -> Result<MseCurves> {
    let runs: Vec<&FilterRun> = results.iter().filter_map(|r| r.filter_run(kind)).collect();
    if runs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no successful runs carry {} results",
            kind.label()
        )));
    }
    let n_slots = results[0].n_slots;
    let n_paths = results[0].tracked_paths;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let mut aoa = Vec::with_capacity(n_slots);
    let mut aod = Vec::with_capacity(n_slots);
    let mut gain = Vec::with_capacity(n_slots);
    let mut gain_per_path = vec![Vec::with_capacity(n_slots); n_paths];
    for slot in 0..n_slots {
        let collect = |f: &dyn Fn(&SlotErrors) -> f64| -> Vec<f64> {
            runs.iter().map(|r| f(&r.errors[slot])).collect()
        };
        aoa.push(slot_stat(&collect(&|e| mean(&e.aoa_sq))));
        aod.push(slot_stat(&collect(&|e| mean(&e.aod_sq))));
        gain.push(slot_stat(&collect(&|e| mean(&e.gain_sq))));
        for (p, curve) in gain_per_path.iter_mut().enumerate() {
            curve.push(slot_stat(&collect(&|e| e.gain_sq[p])));
        }
    }
    Ok(MseCurves {
        n_runs: runs.len(),
        aoa,
        aod,
        gain,
        gain_per_path,
    })
}

/// Monte Carlo aggregate over `n_runs` episodes.
#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    pub config: ScenarioConfig,
    pub config_hash: u64,
    pub curves: Vec<(FilterKind, MseCurves)>,
    pub n_requested: usize,
    pub n_failed: usize,
    /// One message per failed episode.
    pub failures: Vec<String>,
    /// Chosen (γ, κ) histogram over successful runs, most frequent first.
    pub chosen_ut: Vec<((f64, f64), usize)>,
}

impl MonteCarloOutput {
    pub fn curves_for(&self, kind: FilterKind) -> Option<&MseCurves> {
        self.curves.iter().find(|(k, _)| *k == kind).map(|(_, c)| c)
    }
}

/// Run the configured number of episodes (in parallel when a rayon pool
/// offers threads), exclude failures from the averages, and aggregate.
pub fn monte_carlo(cfg: &ScenarioConfig) -> Result<MonteCarloOutput> {
    cfg.validate()?;
    let outcomes: Vec<(u64, Result<RunResult>)> = (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = episode_seed(cfg.seed, i);
            (seed, run_episode(cfg, seed))
        })
        .collect();

    let mut results = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(format!("episode seed {seed}: {e}")),
        }
    }
    if results.is_empty() {
        return Err(Error::Numerical {
            slot: None,
            msg: format!(
                "all {} runs failed; first failure: {}",
                cfg.n_runs,
                failures.first().map(String::as_str).unwrap_or("none")
            ),
        });
    }

    let mut curves = Vec::new();
    for kind in cfg.filter.kinds() {
        curves.push((*kind, angle_mse(&results, *kind)?));
    }

    let mut hist: Vec<((f64, f64), usize)> = Vec::new();
    for r in &results {
        if let Some(choice) = r.chosen_ut {
            match hist.iter_mut().find(|(c, _)| *c == choice) {
                Some((_, n)) => *n += 1,
                None => hist.push((choice, 1)),
            }
        }
    }
    hist.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(a.0 .0.partial_cmp(&b.0 .0).unwrap())
            .then(a.0 .1.partial_cmp(&b.0 .1).unwrap())
    });

    Ok(MonteCarloOutput {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        curves,
        n_requested: cfg.n_runs,
        n_failed: failures.len(),
        failures,
        chosen_ut: hist,
    })
}

/// Final-slot enhancement of the UKF over the EKF per parameter, in
/// percent: (MSE_EKF − MSE_UKF)/MSE_EKF · 100.
#[derive(Debug, Clone)]
pub struct ComparisonOutput {
    pub mc: MonteCarloOutput,
    pub enhancement_aoa: f64,
    pub enhancement_aod: f64,
    pub enhancement_gain: f64,
}

/// Run both filters on common random numbers and report per-slot curves
/// plus the final-slot enhancement percentages.
pub fn compare_filters(cfg: &ScenarioConfig) -> Result<ComparisonOutput> {
    if cfg.filter != FilterSel::Both {
        return Err(Error::InvalidParameter(
            "compare_filters requires filter = both".into(),
        ));
    }
    let mc = monte_carlo(cfg)?;
    let ukf = mc
        .curves_for(FilterKind::Ukf)
        .ok_or_else(|| Error::InvalidInput("missing UKF curves".into()))?;
    let ekf = mc
        .curves_for(FilterKind::Ekf)
        .ok_or_else(|| Error::InvalidInput("missing EKF curves".into()))?;
    let last = cfg.n_slots - 1;
    let pct = |e: f64, u: f64| {
        if e == 0.0 {
            0.0
        } else {
            (e - u) / e * 100.0
        }
    };
    Ok(ComparisonOutput {
        enhancement_aoa: pct(ekf.aoa[last].mse, ukf.aoa[last].mse),
        enhancement_aod: pct(ekf.aod[last].mse, ukf.aod[last].mse),
        enhancement_gain: pct(ekf.gain[last].mse, ukf.gain[last].mse),
        mc,
    })
}
