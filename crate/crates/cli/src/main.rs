//! Command-line front end: run experiments, compare filters, sweep a
//! parameter, or execute the fast invariant suite.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 runtime or
//! numerical failure.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beamtrack::sim::{compare_filters, monte_carlo, FilterSel, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

use config::ValidationError;
use output::{emit_results, VERSION};

#[derive(Parser)]
#[command(
    name = "beamtrack",
    version,
    about = "Beamspace MIMO beam/channel tracking simulator"
)]
struct Cli {
    /// Cap the number of worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file (TOML); defaults apply for anything unset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set sigma2=0.25 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: $BEAMTRACK_OUT or ./beamtrack-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured scenario and write mse.csv + summary.txt.
    Run(RunArgs),
    /// Run with both filters on common random numbers and report the
    /// enhancement percentages.
    Compare(RunArgs),
    /// Re-run the scenario for each value of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Config key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values for the swept key.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Fast invariant checks (unitarity, moment matching, Kalman oracle,
    /// beamspace-element identity).
    Selftest,
}

fn out_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var_os("BEAMTRACK_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("beamtrack-out"))
}

fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> anyhow::Result<()> {
    eprintln!(
        "running {} episodes ({} mode, K={}, {} slots)...",
        cfg.n_runs,
        match cfg.mode {
            beamtrack::sim::Mode::Dl => "DL",
            beamtrack::sim::Mode::Ul => "UL",
        },
        cfg.k_users,
        cfg.n_slots
    );
    if cfg.filter == FilterSel::Both {
        let cmp = compare_filters(cfg)?;
        emit_results(&cmp.mc, Some(&cmp), dir)?;
        eprintln!(
            "done: {} succeeded, {} failed; enhancement aoa {:+.2}%",
            cmp.mc.n_requested - cmp.mc.n_failed,
            cmp.mc.n_failed,
            cmp.enhancement_aoa
        );
    } else {
        let mc = monte_carlo(cfg)?;
        emit_results(&mc, None, dir)?;
        eprintln!(
            "done: {} succeeded, {} failed",
            mc.n_requested - mc.n_failed,
            mc.n_failed
        );
    }
    eprintln!("results in {}", dir.display());
    Ok(())
}

fn cmd_run(args: &RunArgs, force_both: bool) -> anyhow::Result<()> {
    let mut cfg = config::parse_config(args.config.as_deref(), &args.set)?;
    if force_both {
        cfg.filter = FilterSel::Both;
    }
    run_scenario(&cfg, &out_dir(&args.out))
}

fn cmd_sweep(args: &RunArgs, param: &str, values: &[String]) -> anyhow::Result<()> {
    let base = out_dir(&args.out);
    let mut index = String::new();
    for value in values {
        let mut overrides = args.set.clone();
        overrides.push(format!("{param}={value}"));
        let cfg = config::parse_config(args.config.as_deref(), &overrides)?;
        let dir = base.join(format!("{param}={value}"));
        run_scenario(&cfg, &dir)?;
        index.push_str(&format!("{param}={value} -> {}\n", dir.display()));
    }
    std::fs::create_dir_all(&base)?;
    std::fs::write(base.join("sweep.txt"), index)?;
    Ok(())
}

fn cmd_selftest() -> anyhow::Result<()> {
    println!("{VERSION} selftest");
    let mut all_ok = true;
    for check in beamtrack::selftest::run() {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {} — {}", check.name, check.detail);
        all_ok &= check.passed;
    }
    if all_ok {
        Ok(())
    } else {
        Err(beamtrack::Error::Numerical {
            slot: None,
            msg: "selftest checks failed".into(),
        }
        .into())
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ValidationError>().is_some() {
        return 1;
    }
    if let Some(core) = err.downcast_ref::<beamtrack::Error>() {
        return match core {
            beamtrack::Error::Config(_) | beamtrack::Error::InvalidParameter(_) => 1,
            _ => 2,
        };
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args, false),
        Cmd::Compare(args) => cmd_run(args, true),
        Cmd::Sweep { run, param, values } => cmd_sweep(run, param, values),
        Cmd::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
