//! Result files: per-slot `mse.csv` and a human-readable `summary.txt`.
//! Both embed the master seed and the full resolved configuration, and are
//! byte-stable for identical inputs.

use std::fmt::Write as _;
use std::path::Path;

use beamtrack::sim::{ComparisonOutput, MonteCarloOutput, MseCurves};

pub const VERSION: &str = concat!("beamtrack ", env!("CARGO_PKG_VERSION"));

/// Parameter columns emitted per filter; multipath runs add the LoS/NLoS
/// gain breakdown.
fn parameters(curves: &MseCurves) -> Vec<&'static str> {
    if curves.gain_per_path.len() > 1 {
        vec!["aoa", "aod", "gain", "gain_los", "gain_nlos"]
    } else {
        vec!["aoa", "aod", "gain"]
    }
}

fn stat_for(curves: &MseCurves, parameter: &str, slot: usize) -> (f64, f64) {
    let from = |s: &beamtrack::sim::SlotStat| (s.mse, s.stderr);
    match parameter {
        "aoa" => from(&curves.aoa[slot]),
        "aod" => from(&curves.aod[slot]),
        "gain" => from(&curves.gain[slot]),
        "gain_los" => from(&curves.gain_per_path[0][slot]),
        "gain_nlos" => {
            // Mean over non-LoS paths; stderr pooled quadratically.
            let n = curves.gain_per_path.len() - 1;
            let mse = (1..=n)
                .map(|p| curves.gain_per_path[p][slot].mse)
                .sum::<f64>()
                / n as f64;
            let var = (1..=n)
                .map(|p| curves.gain_per_path[p][slot].stderr.powi(2))
                .sum::<f64>()
                / (n * n) as f64;
            (mse, var.sqrt())
        }
        other => unreachable!("unknown parameter {other}"),
    }
}

/// Render the per-slot CSV: header comments with seed/config, then one row
/// per (slot, filter, parameter).
pub fn render_csv(mc: &MonteCarloOutput) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {VERSION}");
    let _ = writeln!(out, "# master_seed = {}", mc.config.seed);
    let _ = writeln!(out, "# config_hash = {:016x}", mc.config_hash);
    let _ = writeln!(out, "# config = {}", mc.config.canonical());
    let _ = writeln!(out, "slot,filter,parameter,mse,stderr,n_runs");
    for slot in 0..mc.config.n_slots {
        for (kind, curves) in &mc.curves {
            for param in parameters(curves) {
                let (mse, stderr) = stat_for(curves, param, slot);
                let _ = writeln!(
                    out,
                    "{},{},{param},{mse},{stderr},{}",
                    slot + 1,
                    kind.label(),
                    curves.n_runs
                );
            }
        }
    }
    out
}

/// Render the run summary: version, seed, config echo (TOML, re-parseable),
/// final-slot MSEs, enhancement lines when both filters ran, the chosen
/// sigma-spread histogram, and the failure tally.
pub fn render_summary(mc: &MonteCarloOutput, cmp: Option<&ComparisonOutput>) -> String {
    let cfg = &mc.config;
    let mut out = String::new();
    let _ = writeln!(out, "{VERSION}");
    let _ = writeln!(out, "config_hash: {:016x}", mc.config_hash);
    let _ = writeln!(out, "master_seed: {}", cfg.seed);
    let ref_power = (cfg.n_bs * cfg.n_ue) as f64 / cfg.tracked_paths() as f64;
    let noise_var = beamtrack::link::snr_to_noise_var(cfg.snr_db, ref_power);
    let _ = writeln!(
        out,
        "noise convention: ref_power = N_t*N_r/L = {ref_power}; sigma_v^2 = {noise_var}"
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "[config]");
    let echo = toml::to_string_pretty(cfg).expect("config serializes");
    out.push_str(&echo);
    let _ = writeln!(out);
    let _ = writeln!(out, "[results]");
    let _ = writeln!(
        out,
        "runs: requested {}, succeeded {}, failed {}",
        mc.n_requested,
        mc.n_requested - mc.n_failed,
        mc.n_failed
    );
    if !mc.chosen_ut.is_empty() {
        let hist = mc
            .chosen_ut
            .iter()
            .take(5)
            .map(|((g, k), n)| format!("(gamma={g}, kappa={k}) x{n}"))
            .collect::<Vec<_>>()
            .join("; ");
        let _ = writeln!(out, "chosen sigma spread: {hist}");
    }
    let last = cfg.n_slots - 1;
    for (kind, curves) in &mc.curves {
        let _ = writeln!(
            out,
            "final-slot mse ({}): aoa={} aod={} gain={}",
            kind.label(),
            curves.aoa[last].mse,
            curves.aod[last].mse,
            curves.gain[last].mse
        );
    }
    if let Some(c) = cmp {
        let _ = writeln!(
            out,
            "enhancement (ukf over ekf, final slot): aoa={:+.2}% aod={:+.2}% gain={:+.2}%",
            c.enhancement_aoa, c.enhancement_aod, c.enhancement_gain
        );
    }
    if mc.n_failed > 0 {
        let _ = writeln!(out, "failures:");
        for f in &mc.failures {
            let _ = writeln!(out, "  {f}");
        }
    }
    out
}

/// Write `mse.csv` and `summary.txt` into `dir`, creating it if needed.
pub fn emit_results(
    mc: &MonteCarloOutput,
    cmp: Option<&ComparisonOutput>,
    dir: &Path,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("mse.csv"), render_csv(mc))?;
    std::fs::write(dir.join("summary.txt"), render_summary(mc, cmp))?;
    Ok(())
}
