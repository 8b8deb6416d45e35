//! `gasgiant <command> <config.json> [--out DIR] [--seed N] [--quiet]`

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use output::{config_hash, Output};

#[derive(Parser)]
#[command(name = "gasgiant", version, about = "Observability and control experiments on degenerate gas-giant waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue tables of the 1D model or the modal operators.
    Eigen(RunArgs),
    /// Ingham frame bounds over a sweep of observation times.
    FrameSweep(RunArgs),
    /// Observability ratios of random or given data.
    Observe(RunArgs),
    /// Fixed-cap failure table and band-limited constants.
    Localize(RunArgs),
    /// Convexified observation design.
    Design(RunArgs),
    /// Switching schedule and moving-observation check.
    Schedule(RunArgs),
    /// Cesàro block protocol.
    Cesaro(RunArgs),
    /// Minimum-norm boundary controls.
    Control(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn run(name: &str, args: &RunArgs, command: &Command) -> Result<String, CliError> {
    let bytes = std::fs::read(&args.config).map_err(|source| CliError::Config(format!(
        "cannot read {}: {source}",
        args.config.display()
    )))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let seed = args.seed.or(cfg.seed);
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut out = Output::new(&dir, name, &config_hash(&bytes), cfg.output.csv, cfg.output.json, cfg.output.svg)?;
    let summary = match command {
        Command::Eigen(_) => commands::eigen(&cfg, &mut out)?,
        Command::FrameSweep(_) => commands::frame_sweep(&cfg, &mut out)?,
        Command::Observe(_) => commands::observe(&cfg, &mut out, seed)?,
        Command::Localize(_) => commands::localize(&cfg, &mut out)?,
        Command::Design(_) => commands::design(&cfg, &mut out)?,
        Command::Schedule(_) => commands::schedule(&cfg, &mut out, seed)?,
        Command::Cesaro(_) => commands::cesaro(&cfg, &mut out, seed)?,
        Command::Control(_) => commands::control(&cfg, &mut out, seed)?,
    };
    let files = out.finish(&args.config.display().to_string(), seed)?;
    Ok(format!("{name}: {summary}\nwrote {} to {}", files.join(", "), dir.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Eigen(a) => ("eigen", a),
        Command::FrameSweep(a) => ("frame-sweep", a),
        Command::Observe(a) => ("observe", a),
        Command::Localize(a) => ("localize", a),
        Command::Design(a) => ("design", a),
        Command::Schedule(a) => ("schedule", a),
        Command::Cesaro(a) => ("cesaro", a),
        Command::Control(a) => ("control", a),
    };
    match run(name, args, &cli.command) {
        Ok(summary) => {
            if !args.quiet {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
