//! `spsource`: design drive pulses, simulate click streams and analyse them.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use spsource::photostream::StreamFormat;
use spsource::scenario::ScenarioConfig;

#[derive(Parser)]
#[command(name = "spsource", version, about = "Cavity-QED single-photon source simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.n_shots`.
    #[arg(long)]
    shots: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Binary,
}

impl From<Format> for StreamFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => StreamFormat::Text,
            Format::Binary => StreamFormat::Binary,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Invert the photon shape into a drive and check it by forward simulation.
    DesignPulse {
        #[command(flatten)]
        common: Common,
    },
    /// Run the fountain, emission and detection chain; writes the click stream
    /// and a ground-truth sidecar.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compute every statistic from a click stream.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Click stream (text or binary).
        #[arg(long)]
        stream: PathBuf,
        /// Perpendicular-polarization stream of a HOM pair; `--stream` is then
        /// the parallel one.
        #[arg(long)]
        perpendicular: Option<PathBuf>,
    },
    /// Simulate and analyse in one go; HOM scenarios run both polarizations.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

pub struct Context {
    pub config: ScenarioConfig,
    pub out: PathBuf,
}

fn context(common: &Common) -> Result<Context> {
    if let Some(n) = common.threads {
        spsource::scenario::set_threads(n)?;
    }
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    if let Some(n) = common.shots {
        config.run.n_shots = n;
    }
    if let Some(out) = &common.out {
        config.run.output_dir = out.clone();
    }
    config.validate()?;
    let out = config.run.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    Ok(Context { config, out })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use spsource::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::Config(_) | E::InvalidParameter { .. } | E::UnknownShape(_) | E::OverlappingWindows(_)) => 2,
        Some(E::Infeasible { .. }) => 3,
        Some(E::InsufficientStatistics(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::DesignPulse { common } => context(common).and_then(|c| commands::design_pulse(&c)),
        Command::Simulate { common, format } => context(common).and_then(|c| commands::simulate(&c, (*format).into())),
        Command::Analyze { common, stream, perpendicular } => {
            context(common).and_then(|c| commands::analyze(&c, stream, perpendicular.as_deref()))
        }
        Command::Report { common, format } => context(common).and_then(|c| commands::report(&c, (*format).into())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
