//! Scenario configuration loading: TOML file, mode-dependent defaults, and
//! `--set key=value` overrides. Unknown keys are rejected, not ignored.

use std::fmt;
use std::path::Path;

use beamtrack::sim::{FilterSel, Mode, ScenarioConfig};
use serde::Deserialize;

/// Validation failure in user-supplied configuration (exit code 1).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

/// All fields optional; anything unset falls back to the mode's defaults.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    fc_ghz: Option<f64>,
    n_bs: Option<usize>,
    n_ue: Option<usize>,
    spacing_ratio: Option<f64>,
    k_users: Option<usize>,
    paths_tracked: Option<usize>,
    sigma2: Option<f64>,
    rho: Option<f64>,
    snr_db: Option<f64>,
    n_slots: Option<usize>,
    n_runs: Option<usize>,
    seed: Option<u64>,
    filter: Option<FilterSel>,
    ut_gammas: Option<Vec<f64>>,
    ut_kappas: Option<Vec<f64>>,
}

impl RawConfig {
    fn apply_override(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
            value
                .parse()
                .map_err(|_| invalid(format!("invalid value {value:?} for key {key:?}")))
        }
        fn parse_list(key: &str, value: &str) -> anyhow::Result<Vec<f64>> {
            value
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| invalid(format!("invalid list entry {v:?} for key {key:?}")))
                })
                .collect()
        }
        match key {
            "mode" => {
                self.mode = Some(match value {
                    "dl" => Mode::Dl,
                    "ul" => Mode::Ul,
                    other => return Err(invalid(format!("unknown mode {other:?} (dl or ul)"))),
                })
            }
            "fc_ghz" => self.fc_ghz = Some(parse(key, value)?),
            "n_bs" => self.n_bs = Some(parse(key, value)?),
            "n_ue" => self.n_ue = Some(parse(key, value)?),
            "spacing_ratio" => self.spacing_ratio = Some(parse(key, value)?),
            "k_users" => self.k_users = Some(parse(key, value)?),
            "paths_tracked" => self.paths_tracked = Some(parse(key, value)?),
            "sigma2" => self.sigma2 = Some(parse(key, value)?),
            "rho" => self.rho = Some(parse(key, value)?),
            "snr_db" => self.snr_db = Some(parse(key, value)?),
            "n_slots" => self.n_slots = Some(parse(key, value)?),
            "n_runs" => self.n_runs = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "filter" => {
                self.filter = Some(match value {
                    "ukf" => FilterSel::Ukf,
                    "ekf" => FilterSel::Ekf,
                    "both" => FilterSel::Both,
                    other => {
                        return Err(invalid(format!(
                            "unknown filter {other:?} (ukf, ekf, or both)"
                        )))
                    }
                })
            }
            "ut_gammas" => self.ut_gammas = Some(parse_list(key, value)?),
            "ut_kappas" => self.ut_kappas = Some(parse_list(key, value)?),
            other => return Err(invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn resolve(self) -> ScenarioConfig {
        let mode = self.mode.unwrap_or(Mode::Dl);
        let d = ScenarioConfig::default_for(mode);
        ScenarioConfig {
            mode,
            fc_ghz: self.fc_ghz.unwrap_or(d.fc_ghz),
            n_bs: self.n_bs.unwrap_or(d.n_bs),
            n_ue: self.n_ue.unwrap_or(d.n_ue),
            spacing_ratio: self.spacing_ratio.unwrap_or(d.spacing_ratio),
            k_users: self.k_users.unwrap_or(d.k_users),
            paths_tracked: self.paths_tracked.unwrap_or(d.paths_tracked),
            sigma2: self.sigma2.unwrap_or(d.sigma2),
            rho: self.rho.unwrap_or(d.rho),
            snr_db: self.snr_db.unwrap_or(d.snr_db),
            n_slots: self.n_slots.unwrap_or(d.n_slots),
            n_runs: self.n_runs.unwrap_or(d.n_runs),
            seed: self.seed.unwrap_or(d.seed),
            filter: self.filter.unwrap_or(d.filter),
            ut_gammas: self.ut_gammas.unwrap_or(d.ut_gammas),
            ut_kappas: self.ut_kappas.unwrap_or(d.ut_kappas),
        }
    }
}

/// Load the scenario: optional TOML file, then `--set` overrides, then
/// mode-dependent defaults for everything left unset.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<ScenarioConfig> {
    let mut raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<RawConfig>(&text)
                .map_err(|e| invalid(format!("cannot parse config {}: {e}", p.display())))?
        }
        None => RawConfig::default(),
    };
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| invalid(format!("override {entry:?} is not of the form key=value")))?;
        raw.apply_override(key.trim(), value.trim())?;
    }
    let cfg = raw.resolve();
    cfg.validate()
        .map_err(|e| invalid(format!("invalid configuration: {e}")))?;
    // TOML integers are i64, and the summary echoes the config as TOML.
    if cfg.seed > i64::MAX as u64 {
        return Err(invalid(format!(
            "seed {} exceeds {} and would not round-trip through the config echo",
            cfg.seed,
            i64::MAX
        )));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_dl_defaults() {
        let cfg = parse_config(None, &[]).unwrap();
        assert_eq!(cfg.mode, Mode::Dl);
        assert_eq!(cfg.n_bs, 16);
        assert_eq!(cfg.n_ue, 8);
        assert_eq!(cfg.rho, 0.99);
        assert_eq!(cfg.n_slots, 20);
        assert_eq!(cfg.snr_db, 20.0);
    }

    #[test]
    fn ul_mode_switches_defaults() {
        let cfg = parse_config(None, &["mode=ul".into()]).unwrap();
        assert_eq!(cfg.snr_db, 0.0);
        assert_eq!(cfg.sigma2, 0.1225);
    }

    #[test]
    fn sigma_override_passes_through() {
        let cfg = parse_config(None, &["sigma2=0.0625".into()]).unwrap();
        assert_eq!(cfg.sigma2, 0.0625);
    }

    #[test]
    fn oversized_seed_is_rejected() {
        let err = parse_config(None, &[format!("seed={}", u64::MAX)]).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config(None, &["sigma=0.1".into()]).unwrap_err();
        assert!(err.to_string().contains("sigma"));
        assert!(err.downcast_ref::<ValidationError>().is_some());
    }

    #[test]
    fn invalid_value_names_field() {
        let err = parse_config(None, &["n_slots=-3".into()]).unwrap_err();
        assert!(err.to_string().contains("n_slots"));
    }

    #[test]
    fn zero_n_slots_fails_validation() {
        let err = parse_config(None, &["n_slots=0".into()]).unwrap_err();
        assert!(err.to_string().contains("n_slots"));
    }

    #[test]
    fn toml_round_trip_through_echo() {
        let cfg = parse_config(None, &["mode=ul".into(), "k_users=4".into()]).unwrap();
        let echo = toml::to_string_pretty(&cfg).unwrap();
        let dir = std::env::temp_dir().join("beamtrack-cfg-roundtrip.toml");
        std::fs::write(&dir, &echo).unwrap();
        let back = parse_config(Some(&dir), &[]).unwrap();
        assert_eq!(cfg, back);
        std::fs::remove_file(&dir).ok();
    }
}
