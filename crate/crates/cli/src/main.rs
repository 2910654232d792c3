//! `wellsplit`: file-in, file-out driver for the wellsplit library.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wellsplit::splitter::Caps;

use crate::commands::Context;
use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Numeric(#[from] wellsplit::Error),

    #[error("{0} sweep runs aborted")]
    Aborted(usize),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        CliError::Config {
            path: if path.is_empty() { ".".into() } else { path },
            message: message.into(),
        }
    }

    pub fn missing(section: &str) -> Self {
        Self::config(section, "section is required by this subcommand")
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config { .. } | CliError::Numeric(wellsplit::Error::Domain(_)) => 2,
            CliError::Numeric(_) | CliError::Aborted(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wellsplit", version, about = "Interference spectra of the split infinite square well")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, default_value = "wellsplit.json")]
    config: PathBuf,

    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Truncation caps as L_MAX,K_MAX.
    #[arg(long, global = true, value_parser = parse_caps)]
    caps: Option<Caps>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Interference spectrum and outcome probabilities after a split.
    Spectrum,
    /// Zeros of the wavefunction at a time or over a window.
    Zeros,
    /// Delta-barrier spectrum versus strength.
    Delta,
    /// One ramped-barrier simulation.
    Simulate,
    /// A grid of ramped-barrier simulations with an exponent fit.
    Sweep,
    /// Probability density over a space-time grid across a split.
    Carpet,
    /// Barrier energy under the transition-probability models.
    Accounting,
}

fn parse_caps(s: &str) -> Result<Caps, String> {
    let (l, k) = s.split_once(',').ok_or("expected L_MAX,K_MAX")?;
    let l_max: u32 = l.trim().parse().map_err(|e| format!("L_MAX: {e}"))?;
    let k_max: u32 = k.trim().parse().map_err(|e| format!("K_MAX: {e}"))?;
    if l_max == 0 || k_max == 0 {
        return Err("caps must be positive".into());
    }
    Ok(Caps { l_max, k_max })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::load(&cli.config)?;
    if cli.jobs == 0 {
        return Err(CliError::config("--jobs", "must be at least 1"));
    }
    // a second initialisation in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    let desk = std::env::var("WELLSPLIT_DESK_SCALE").is_ok_and(|v| v == "1");
    let out = cli
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context {
        config,
        out,
        caps: cli.caps,
        desk,
    };
    match cli.command {
        Command::Spectrum => commands::spectrum(&ctx),
        Command::Zeros => commands::zeros(&ctx),
        Command::Delta => commands::delta(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Sweep => commands::run_sweep(&ctx),
        Command::Carpet => commands::run_carpet(&ctx),
        Command::Accounting => commands::accounting(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
