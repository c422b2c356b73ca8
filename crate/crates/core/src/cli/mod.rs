//! Command-line front end: config loading, subcommands and artifact output.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 computation
//! error. Failures print one JSON object on a single stderr line.

pub mod artifacts;
pub mod commands;
pub mod config;

use artifacts::Artifacts;
use clap::{Parser, Subcommand};
use commands::CommandError;
use config::{ConfigError, RunConfig};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "nanofiber", version, about = "Nanofiber fluorescence detection model")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "configs/paper.toml")]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for stochastic paths (scan noise).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override one config key, e.g. `--set fiber.radius_nm=180`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// HE11 mode summary and radial intensity profile.
    Mode,
    /// Emission coupling curve and shell average.
    Coupling,
    /// Detuning to distance table.
    Calibrate,
    /// Vibrational bound states of both potentials.
    Eigen,
    /// Line lists and broadened profiles.
    Spectrum,
    /// Photon-count chain and atom-number inference.
    Budget,
    /// MOT position scan, Gaussian fit and expansion decay.
    Scan,
    /// Every subcommand in turn.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mode => "mode",
            Command::Coupling => "coupling",
            Command::Calibrate => "calibrate",
            Command::Eigen => "eigen",
            Command::Spectrum => "spectrum",
            Command::Budget => "budget",
            Command::Scan => "scan",
            Command::All => "all",
        }
    }
}

const ALL: [Command; 7] = [
    Command::Mode,
    Command::Coupling,
    Command::Calibrate,
    Command::Eigen,
    Command::Spectrum,
    Command::Budget,
    Command::Scan,
];

fn report(kind: &str, command: Option<&str>, details: Vec<String>) {
    let mut v = json!({ "error": kind, "details": details });
    if let Some(c) = command {
        v["command"] = json!(c);
    }
    eprintln!("{v}");
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(std::io::stdout(), "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            report("UsageError", None, vec![first]);
            return 1;
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let cfg = match config::load(&cli.config, &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            let kind = match e {
                ConfigError::Io { .. } => "ConfigUnreadable",
                ConfigError::Invalid(_) => "ConfigInvalid",
            };
            report(kind, None, e.problems());
            return 1;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            report("UsageError", None, vec!["--threads must be at least 1".into()]);
            return 1;
        }
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let mut out = match Artifacts::new(&dir, &cfg.hash, cli.seed) {
        Ok(o) => o,
        Err(e) => {
            report("OutputUnwritable", None, vec![format!("{}: {e}", dir.display())]);
            return 2;
        }
    };
    let commands: Vec<Command> = match cli.command {
        Command::All => ALL.to_vec(),
        c => vec![c],
    };
    for c in commands {
        match dispatch(c, &cfg, &mut out, cli.seed) {
            Ok(text) => {
                // a closed pipe (`| head`) must not abort the remaining subcommands
                let line = text.replace('\n', &format!("\n[{}] ", c.name()));
                let _ = writeln!(std::io::stdout(), "[{}] {line}", c.name());
            }
            Err(CommandError::Config(m)) => {
                report("ConfigInvalid", Some(c.name()), vec![m]);
                return 1;
            }
            Err(e) => {
                report("SubcommandFailed", Some(c.name()), vec![e.to_string()]);
                return 2;
            }
        }
    }
    0
}

fn dispatch(c: Command, cfg: &RunConfig, out: &mut Artifacts, seed: Option<u64>) -> commands::CommandResult {
    match c {
        Command::Mode => commands::mode(cfg, out),
        Command::Coupling => commands::coupling(cfg, out),
        Command::Calibrate => commands::calibrate(cfg, out),
        Command::Eigen => commands::eigen(cfg, out),
        Command::Spectrum => commands::spectrum(cfg, out),
        Command::Budget => commands::budget(cfg, out),
        Command::Scan => commands::scan(cfg, out, seed),
        Command::All => unreachable!("expanded by the caller"),
    }
}
