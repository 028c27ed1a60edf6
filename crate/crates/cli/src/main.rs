//! `nfloc`: near-field source localization under unknown mutual coupling.
//!
//! Subcommands: `simulate` generates coupled snapshots, `estimate` locates
//! sources in a snapshot file, `mc-rmse` sweeps estimator accuracy over
//! SNR, and `bench` compares estimator wall times.
//!
//! Exit codes: 0 on success, 1 for a bad request (flags, config file or
//! input files), 2 for a failure while computing or writing results.

mod commands;
mod config;
mod io;

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{usage, CliResult};
use config::Overrides;

#[derive(Parser)]
#[command(
    name = "nfloc",
    version,
    about = "Near-field source localization experiments"
)]
struct Cli {
    /// Worker threads for trial parallelism. Falls back to the
    /// NFLOC_THREADS variable, then to one thread per core.
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Output style for the `estimate` command.
#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    /// Human-readable lines.
    Text,
    /// The pinned estimate CSV schema.
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coupled snapshots for the configured scene.
    Simulate {
        /// Scenario description in TOML.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Master seed; overrides the config's master_seed.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        /// SNR in dB for this dataset; the first value of a list is used.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        snr_db: Option<Vec<f64>>,
        /// Write the snapshot table here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also write the drawn coupling vectors to this file.
        #[arg(long, value_name = "PATH")]
        coupling_out: Option<PathBuf>,
    },
    /// Estimate source locations from a snapshot file.
    Estimate {
        /// Scenario description in TOML.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Snapshot table produced by `simulate`.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Coupling file for the known-coupling music baseline.
        #[arg(long, value_name = "PATH")]
        coupling: Option<PathBuf>,
        /// music, alg1, alg2 or all; default is the config's method list.
        #[arg(long, value_name = "NAME")]
        method: Option<String>,
        /// Direction grid step in degrees.
        #[arg(long, value_name = "DEG")]
        doa_step: Option<f64>,
        /// Range grid step in wavelengths.
        #[arg(long, value_name = "WAVELENGTHS")]
        range_step: Option<f64>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write results here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo RMSE sweep over the configured (direction, SNR) cells.
    McRmse {
        /// Scenario description in TOML.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Master seed; required here or as the config's master_seed.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        /// music, alg1, alg2 or all; default is the config's method list.
        #[arg(long, value_name = "NAME")]
        method: Option<String>,
        /// SNR points in dB, comma separated.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        snr_db: Option<Vec<f64>>,
        /// Trials per cell.
        #[arg(long, value_name = "K")]
        trials: Option<usize>,
        /// Direction grid step in degrees.
        #[arg(long, value_name = "DEG")]
        doa_step: Option<f64>,
        /// Range grid step in wavelengths.
        #[arg(long, value_name = "WAVELENGTHS")]
        range_step: Option<f64>,
        /// Write the RMSE table here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Compare estimator wall times on one dataset and grid.
    Bench {
        /// Scenario description in TOML.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Master seed; required here or as the config's master_seed.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        /// Direction grid step in degrees.
        #[arg(long, value_name = "DEG")]
        doa_step: Option<f64>,
        /// Range grid step in wavelengths.
        #[arg(long, value_name = "WAVELENGTHS")]
        range_step: Option<f64>,
        /// Write the timing table here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// Builds the global thread pool when a size was requested explicitly.
fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("NFLOC_THREADS") {
            Ok(text) => Some(text.trim().parse::<usize>().map_err(|_| {
                usage(anyhow!(
                    "NFLOC_THREADS must be a positive integer, not {text:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(usage(anyhow!("thread count must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(anyhow!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Simulate {
            config,
            seed,
            snr_db,
            out,
            coupling_out,
        } => {
            let ov = Overrides {
                seed,
                snr_db,
                ..Overrides::default()
            };
            commands::simulate(&config, &ov, &out, &coupling_out)
        }
        Command::Estimate {
            config,
            input,
            coupling,
            method,
            doa_step,
            range_step,
            format,
            out,
        } => {
            let ov = Overrides {
                method,
                doa_step_deg: doa_step,
                range_step_wl: range_step,
                ..Overrides::default()
            };
            commands::estimate(&config, &ov, &input, &coupling, format == Format::Csv, &out)
        }
        Command::McRmse {
            config,
            seed,
            method,
            snr_db,
            trials,
            doa_step,
            range_step,
            out,
        } => {
            let ov = Overrides {
                seed,
                method,
                snr_db,
                trials,
                doa_step_deg: doa_step,
                range_step_wl: range_step,
            };
            commands::mc_rmse(&config, &ov, &out)
        }
        Command::Bench {
            config,
            seed,
            doa_step,
            range_step,
            out,
        } => {
            let ov = Overrides {
                seed,
                doa_step_deg: doa_step,
                range_step_wl: range_step,
                ..Overrides::default()
            };
            commands::bench(&config, &ov, &out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                e.exit()
            }
            _ => {
                let _ = e.print();
                std::process::exit(1);
            }
        },
    };
    if let Err(failure) = run(cli) {
        eprintln!("error: {:#}", failure.error);
        std::process::exit(failure.exit_code);
    }
}
