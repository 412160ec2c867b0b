//! Command-line front end: declarative experiment configs in, deterministic
//! CSV and container files out.
//!
//! Exit codes: 0 success, 1 config errors, 2 admissibility errors,
//! 3 numeric/data errors.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::Config;

#[derive(Parser)]
#[command(
    name = "anisonorm",
    about = "Weighted Riesz/Fourier operator norms in anisotropic Lebesgue scales",
    version
)]
struct Cli {
    /// Experiment config file (flat `key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out.dir` from the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (falls back to ANISONORM_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Quadrature tolerance override (overrides `tolerances.quadrature`)
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print and write the per-block endpoint table and envelope samples
    Exponents,
    /// Apply the configured operator to a grid-function container
    Apply {
        /// Input container path
        #[arg(long)]
        input: PathBuf,
        /// Output container path (a .meta.txt sidecar is written next to it)
        #[arg(long)]
        output: PathBuf,
    },
    /// Lower-bound scan: endpoint ladder with a blow-up fit, or a p-grid
    Scan,
    /// Calibrate the envelope and check the norm-transfer inequality
    Transfer,
    /// Run the built-in invariant suite
    Verify,
}

fn init_threads(cli_threads: Option<usize>) {
    let n = cli_threads.or_else(|| {
        std::env::var("ANISONORM_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(n) = n {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required for this command".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = Config::parse(&text)?;
    if let Some(tol) = cli.tolerance {
        // strip any configured value, then append the override
        let mut lines: Vec<String> = cfg
            .serialize()
            .lines()
            .filter(|l| !l.starts_with("tolerances.quadrature "))
            .map(str::to_string)
            .collect();
        lines.push(format!("tolerances.quadrature = {tol}"));
        cfg = Config::parse(&lines.join("\n"))?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Exponents => {
            let cfg = load_config(cli)?;
            commands::cmd_exponents(&cfg, cli.out.as_deref())
        }
        Command::Apply { input, output } => {
            let cfg = load_config(cli)?;
            commands::cmd_apply(&cfg, input, output, cli.out.as_deref())
        }
        Command::Scan => {
            let cfg = load_config(cli)?;
            commands::cmd_scan(&cfg, cli.out.as_deref())
        }
        Command::Transfer => {
            let cfg = load_config(cli)?;
            commands::cmd_transfer(&cfg, cli.out.as_deref())
        }
        Command::Verify => commands::cmd_verify(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
