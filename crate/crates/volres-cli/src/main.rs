//! Command-line driver: wires the run configuration to the computation
//! pipelines and writes plot-ready CSV/JSON outputs atomically.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "volres",
    about = "Newton-potential spectra and scattering resonances of high-contrast inclusions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory override (beats config and VOLRES_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker thread cap override; 0 keeps the default pool.
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate acceptance thresholds and exit 4 on failure.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum convergence study: modes CSV per resolution plus, for balls,
    /// the analytic oracle comparison.
    Spectrum(CommonArgs),
    /// Resonance pipeline: per-eps CSV, localization report, expansion fit.
    Resonances(CommonArgs),
    /// Real-frequency sweep CSV plus peaks JSON.
    Sweep(CommonArgs),
    /// Localization constants and disc check on cached resonances.
    Localize(CommonArgs),
    /// Unit-ball oracle eigenvalue table.
    Oracle(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&commands::Ctx) -> volres::Result<bool>) = match &cli.command
    {
        Command::Spectrum(a) => (a, commands::cmd_spectrum),
        Command::Resonances(a) => (a, commands::cmd_resonances),
        Command::Sweep(a) => (a, commands::cmd_sweep),
        Command::Localize(a) => (a, commands::cmd_localize),
        Command::Oracle(a) => (a, commands::cmd_oracle),
    };
    let ctx = match commands::Ctx::new(
        args.config.clone(),
        args.out_dir.clone(),
        args.threads,
        args.check,
    ) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&ctx) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("acceptance check failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &volres::Error) -> u8 {
    use volres::Error::*;
    match e {
        Config(_) | Parse { .. } | Domain(_) | Geometry(_) | Precondition(_) | Io(_) | Json(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERICAL,
    }
}
