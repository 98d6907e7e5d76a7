use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adaptlab::commands::{cmd_bounds, cmd_rates, cmd_simulate, cmd_weights, SimulateArgs};
use adaptlab::CliError;
use adaptlab_core::EffectDistribution;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptlab", version, about = "Superefficiency laboratory for data-adaptive local average effects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a JSON configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate mismatch probability, MSE bound and exact clamped MSE as CSV.
    Bounds {
        #[arg(long = "c", allow_hyphen_values = true)]
        c: f64,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        /// Comma-separated sample sizes.
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Construct a nonnegative weighting whose weighted mean equals the target.
    Weights {
        /// e.g. two_point:0,2,0.5 | uniform:0,1 | scaled_beta:2,3,0,1 | degenerate:1.5
        #[arg(long)]
        dist: String,
        #[arg(long, allow_hyphen_values = true)]
        target: f64,
    },
    /// Re-fit the rate slopes from a cells.csv produced by `simulate`.
    Rates {
        #[arg(long)]
        cells: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Simulate {
            config,
            out: dir,
            workers,
            seed,
        } => {
            let manifest = cmd_simulate(&SimulateArgs {
                config,
                out: dir.clone(),
                workers,
                seed,
            })?;
            writeln!(
                out,
                "wrote {} to {} (seed {}, digest {})",
                manifest.outputs.join(", "),
                dir.display(),
                manifest.master_seed,
                manifest.config_digest
            )
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
        Command::Bounds { c, sigma, n } => cmd_bounds(c, sigma, &n, out),
        Command::Weights { dist, target } => {
            let dist: EffectDistribution = dist.parse().map_err(CliError::Input)?;
            cmd_weights(&dist, target, out)
        }
        Command::Rates { cells } => cmd_rates(&cells, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
