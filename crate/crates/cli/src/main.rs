use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cogradar_cli::commands::{cmd_compare, cmd_nsga, cmd_simulate, cmd_sweep, cmd_train};
use cogradar_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(
    name = "cogradar",
    version,
    about = "Time allocation for a multi-function cognitive radar"
)]
struct Cli {
    /// TOML run configuration; every field defaults to the desk-scale setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode under the configured policy and export its traces.
    Simulate,
    /// Train one agent at `env.beta`.
    Train,
    /// Train one agent per β and extract the Pareto front.
    Sweep,
    /// Optimise open-loop schedules with NSGA-II.
    Nsga {
        /// Front CSVs to compare against.
        #[arg(long = "against")]
        against: Vec<PathBuf>,
    },
    /// Hypervolume and dominance statistics for front CSVs.
    Compare {
        files: Vec<PathBuf>,
        /// Reference point as `obj_t,obj_s`; defaults to the shared minima minus 5%.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        reference: Option<[f64; 2]>,
    },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected obj_t,obj_s".into());
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    Ok([num(parts[0])?, num(parts[1])?])
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    let out = cfg.out.clone();
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::Train => cmd_train(&cfg, &out),
        Command::Sweep => cmd_sweep(&cfg, &out),
        Command::Nsga { against } => cmd_nsga(&cfg, &out, &against),
        Command::Compare { files, reference } => cmd_compare(&cfg, &out, &files, reference),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(path) => {
            log::info!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::PartialSweep { .. } = e {
                eprintln!("completed runs were written to the run directory");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
