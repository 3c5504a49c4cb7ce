//! `c2v`: command-line driver for the community charging simulator.

/// Prints a summary line to stdout. A closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use c2v_core::{ClassThresholds, Regime};
use clap::{Parser, Subcommand};

use config::{Invalid, RunConfig, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "c2v",
    version,
    about = "Hourly simulation of community-operated EV charging in a local electricity community"
)]
struct Cli {
    /// TOML run configuration. Without one, a synthetic community with
    /// default parameters is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for synthetic profiles (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for settlement and sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Utilization class bounds `low_max,med_max`.
    #[arg(long, global = true, value_parser = config::parse_thresholds)]
    thresholds: Option<ClassThresholds>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check configuration, price ladder and input series.
    Validate,
    /// Simulate one regime and write its report and hourly trace.
    Run {
        #[arg(long, value_parser = parse_regime)]
        scenario: Regime,
    },
    /// Evaluate the EV price sweep for every scenario and charger option.
    Sweep,
    /// Write synthetic household and EV profile CSVs.
    Synth,
    /// Run both regimes and report the differences.
    Compare,
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse().map_err(|e: c2v_core::Error| e.to_string())
}

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn resolve_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig {
            synth: Some(SynthConfig::default()),
            ..RunConfig::default()
        },
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.thresholds {
        cfg.thresholds = t;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Validate => commands::validate(&cfg),
        Command::Run { scenario } => commands::run(&cfg, *scenario),
        Command::Sweep => commands::sweep(&cfg),
        Command::Synth => commands::synth(&cfg),
        Command::Compare => commands::compare(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(invalid) = e.downcast_ref::<Invalid>() {
                for line in &invalid.0 {
                    eprintln!("invalid: {line}");
                }
                ExitCode::from(EXIT_INVALID)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
