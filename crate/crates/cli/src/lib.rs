//! Command-line driver for the rfsweep simulator.
//!
//! Every subcommand reads the same configuration file, writes CSV files and a
//! `<subcommand>.manifest.ini` into the output directory, and prints a short
//! summary.

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};
use config::{parse_config, ConfigError, RunConfig};
use output::{OutputDir, RunManifest};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_DOMAIN: i32 = 5;
pub const EXIT_INTEGRATION: i32 = 6;
pub const EXIT_CALIBRATION: i32 = 7;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] rfsweep::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use rfsweep::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) | CliError::Core(E::InvalidConfig(_)) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(E::Domain(_) | E::Sampling(_)) => EXIT_DOMAIN,
            CliError::Core(E::Integration { .. }) => EXIT_INTEGRATION,
            CliError::Core(E::Calibration { .. }) => EXIT_CALIBRATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rfsweep", version, about = "Simulate RF-swept time-averaged magnetic traps")]
pub struct Cli {
    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `[run] seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory, overriding `[run] out`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel parts; all cores when omitted.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Two-level Landau–Zener survival: closed form against the TDSE.
    LzScan,
    /// Calibrate the adiabaticity constant α on a (Δν, t_S) grid.
    AlphaCalibrate,
    /// Rotating-wave dressed energies versus detuning.
    DressedMap,
    /// Period-averaged force along the long trap axis.
    AveragedForce,
    /// Monte Carlo trajectories of one ensemble.
    Trajectories,
    /// Retained fraction versus sweep rate or Rabi frequency.
    RetentionScan,
    /// Loading curve and halo estimates.
    Loading,
    /// Upper sweep frequency and minimum Rabi frequency for the config.
    SweepDesign,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LzScan => "lz-scan",
            Command::AlphaCalibrate => "alpha-calibrate",
            Command::DressedMap => "dressed-map",
            Command::AveragedForce => "averaged-force",
            Command::Trajectories => "trajectories",
            Command::RetentionScan => "retention-scan",
            Command::Loading => "loading",
            Command::SweepDesign => "sweep-design",
        }
    }
}

#[derive(Debug)]
pub struct Report {
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

/// Run one subcommand on a resolved configuration.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let manifest = RunManifest::new(command.name(), cfg);
    let mut out = OutputDir::create(&cfg.out, &manifest)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let lines = match command {
        Command::LzScan => commands::lz_scan(cfg, &mut out),
        Command::AlphaCalibrate => commands::alpha_calibrate(cfg, &mut out),
        Command::DressedMap => commands::dressed_map(cfg, &mut out),
        Command::AveragedForce => commands::averaged_force(cfg, &mut out),
        Command::Trajectories => commands::trajectories(cfg, &mut out),
        Command::RetentionScan => commands::retention(cfg, &mut out),
        Command::Loading => commands::loading(cfg, &mut out),
        Command::SweepDesign => commands::sweep_design(cfg, &mut out),
    }?;
    Ok(Report {
        manifest,
        files: out.written,
        lines,
    })
}

/// Load the configuration named on the command line and apply the overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.ensemble.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| {
        let go = || run(cli.command, &cfg);
        match cli.threads {
            None => go(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
                .install(go),
        }
    });
    match result {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("rfsweep {}: error: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
