//! `cpwqed` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration (including usage) error,
//! 2 numeric failure, 3 I/O failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpwqed::spectra::Format;

use crate::commands::Output;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cpwqed", version, about = "CPW resonator-lattice QED simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration: a JSON file or `bundled:NAME`.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory (default: the config's `output.dir`, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact format; repeat for several (default: csv).
    #[arg(long = "format", global = true, value_parser = parse_format)]
    formats: Vec<Format>,
    /// Seed for noisy calibration demos.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Bloch bands and density of states, with a gap-edge summary.
    Bands,
    /// Density of states only.
    Dos,
    /// Normal modes of the finite chain and its in-gap states.
    Finite,
    /// Qubit flux sweep through the lattice spectrum.
    Boundstates,
    /// Two-qubit avoided crossings at several detunings.
    Crossing,
    /// Simulate or load calibration data and fit the crosstalk model.
    Fluxcal,
    /// Check the configuration and lattice without computing anything.
    Validate,
    /// List the bundled configurations.
    Bundled,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: cpwqed::spectra::ExportError| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Bundled = cli.command {
        for (name, _) in config::BUNDLED_CONFIGS {
            println!("bundled:{name}");
        }
        return Ok(());
    }
    let source = cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = config::load(source)?;
    let mut formats = if !cli.formats.is_empty() {
        cli.formats
    } else if !cfg.config.output.formats.is_empty() {
        cfg.config.output.formats.clone()
    } else {
        vec![Format::Csv]
    };
    formats.sort();
    formats.dedup();
    let out = Output {
        dir: cli.out.or_else(|| cfg.config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out")),
        formats,
        svg: cfg.config.output.svg,
        input: cfg.raw.clone(),
    };
    match cli.command {
        Command::Bands => commands::bands(&cfg, &out, true),
        Command::Dos => commands::bands(&cfg, &out, false),
        Command::Finite => commands::finite(&cfg, &out),
        Command::Boundstates => commands::boundstates(&cfg, &out),
        Command::Crossing => commands::crossing(&cfg, &out),
        Command::Fluxcal => commands::fluxcal(&cfg, &out, cli.seed),
        Command::Validate => commands::validate(&cfg),
        Command::Bundled => unreachable!(),
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
