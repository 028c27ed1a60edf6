//! Implementations of the four subcommands.
//!
//! Every command builds its complete output in memory and writes it in one
//! step, so an interrupted or failing run never leaves a partial file.

use std::path::{Path, PathBuf};

use anyhow::anyhow;

use nfloc_core::array::{CouplingVector, SourcePosition};
use nfloc_core::error::Error as CoreError;
use nfloc_core::estimators::{algorithm1, algorithm2, music_known_coupling};
use nfloc_core::mc::{run_monte_carlo, run_timing, Method};
use nfloc_core::sim::{
    derive_seed, generate_coupling, simulate_snapshots, SimulationConfig, SourceTruth,
};
use nfloc_core::subspace::{noise_subspace, sample_covariance};

use crate::config::{FileConfig, Overrides};
use crate::io;

/// A failure carrying the exit code it should produce: 1 for problems with
/// the request (flags, config file, input files), 2 for failures while
/// computing or writing results.
pub struct CliError {
    pub exit_code: i32,
    pub error: anyhow::Error,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError {
        exit_code: 1,
        error: e.into(),
    }
}

pub fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError {
        exit_code: 2,
        error: e.into(),
    }
}

/// Sorts core failures into the two exit classes: invalid parameters are a
/// bad request, everything else failed at runtime.
fn classify(e: CoreError) -> CliError {
    match &e {
        CoreError::InvalidConfig(_)
        | CoreError::Domain(_)
        | CoreError::Dimension(_)
        | CoreError::EmptyInput(_) => usage(e),
        _ => runtime(e),
    }
}

/// Timing repetitions per method; the median of five absorbs scheduler
/// noise without making the command slow.
const BENCH_REPETITIONS: usize = 5;

/// Seed-derivation tags separating the independent draws of one dataset.
const SEED_COUPLING: u64 = 0;
const SEED_SNAPSHOTS: u64 = 1;

fn emit(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| runtime(anyhow!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn read_input(path: &Path, what: &str) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow!("cannot read {what} {}: {e}", path.display())))
}

/// Builds the configured scene's dataset: one coupling draw per source,
/// one snapshot matrix. Used by `simulate` and mirrored by dataset seeds
/// in the sweep engine.
fn build_scene(
    fc: &FileConfig,
    ov: &Overrides,
) -> CliResult<(SimulationConfig, Vec<CouplingVector>)> {
    let array = fc.array().map_err(usage)?;
    let seed = fc.required_seed(ov).map_err(usage)?;
    let snr_db = fc.snr_list(ov).map_err(usage)?[0];
    let mut couplings = Vec::with_capacity(fc.truth.doas_deg.len());
    let mut sources = Vec::with_capacity(fc.truth.doas_deg.len());
    for (i, &doa) in fc.truth.doas_deg.iter().enumerate() {
        let coupling = generate_coupling(
            array.coupling_terms(),
            derive_seed(seed, &[SEED_COUPLING, i as u64]),
        )
        .map_err(classify)?;
        let position = SourcePosition::new(&array, doa, fc.truth.range_wl).map_err(classify)?;
        sources.push(SourceTruth::unit_power(position, coupling.clone()));
        couplings.push(coupling);
    }
    let sim = SimulationConfig {
        array,
        sources,
        snapshots: fc.experiment.snapshots,
        snr_db,
        seed: derive_seed(seed, &[SEED_SNAPSHOTS]),
    };
    Ok((sim, couplings))
}

pub fn simulate(
    config: &Path,
    ov: &Overrides,
    out: &Option<PathBuf>,
    coupling_out: &Option<PathBuf>,
) -> CliResult<()> {
    let fc = FileConfig::load(config).map_err(usage)?;
    let (sim, couplings) = build_scene(&fc, ov)?;
    let snapshots = simulate_snapshots(&sim).map_err(classify)?;
    emit(out, &io::write_snapshots(&snapshots))?;
    if let Some(path) = coupling_out {
        std::fs::write(path, io::write_coupling(&couplings))
            .map_err(|e| runtime(anyhow!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn estimate(
    config: &Path,
    ov: &Overrides,
    input: &Path,
    coupling_path: &Option<PathBuf>,
    csv: bool,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let fc = FileConfig::load(config).map_err(usage)?;
    let array = fc.array().map_err(usage)?;
    let grid = fc.search_grid(ov).map_err(usage)?;
    let methods = fc.methods(ov).map_err(usage)?;
    let num_sources = fc.truth.doas_deg.len();

    let snapshots = io::read_snapshots(&read_input(input, "snapshot file")?, array.num_elements())
        .map_err(usage)?;
    let coupling = match coupling_path {
        Some(path) => {
            let mut all = io::read_coupling(&read_input(path, "coupling file")?).map_err(usage)?;
            if all.len() != 1 {
                return Err(usage(anyhow!(
                    "the known-coupling search scans with a single coupling vector; {} has {}",
                    path.display(),
                    all.len()
                )));
            }
            Some(all.pop().unwrap())
        }
        None => None,
    };

    let covariance = sample_covariance(&snapshots).map_err(classify)?;
    let decomposition = noise_subspace(&covariance, num_sources).map_err(classify)?;
    let basis = decomposition.noise_basis();

    let mut rows = Vec::new();
    for method in methods {
        let record = match method {
            Method::Music => {
                let c = coupling.as_ref().ok_or_else(|| {
                    usage(anyhow!(
                        "--coupling FILE is required to run the music method"
                    ))
                })?;
                music_known_coupling(&array, basis, c, &grid, num_sources).map_err(classify)?
            }
            Method::Alg1 => algorithm1(&array, basis, &grid, num_sources).map_err(classify)?,
            Method::Alg2 => algorithm2(
                &array,
                basis,
                &grid,
                num_sources,
                fc.experiment.refine_tol_deg,
                fc.experiment.refine_max_iter,
            )
            .map_err(classify)?,
        };
        for (i, (&(doa_deg, range_wl), &peak_value)) in
            record.estimates.iter().zip(&record.peak_values).enumerate()
        {
            rows.push(io::EstimateRow {
                method: method.name(),
                source: i,
                doa_deg,
                range_wl,
                peak_value,
                iterations: record.iterations,
                converged: record.converged,
            });
        }
    }

    let content = if csv {
        io::estimate_csv(&rows)
    } else {
        io::estimate_text(&rows)
    };
    emit(out, &content)
}

pub fn mc_rmse(config: &Path, ov: &Overrides, out: &Option<PathBuf>) -> CliResult<()> {
    let fc = FileConfig::load(config).map_err(usage)?;
    let experiment = fc.experiment(ov).map_err(usage)?;
    let rows = run_monte_carlo(&experiment).map_err(classify)?;
    emit(out, &io::mc_csv(&rows))
}

pub fn bench(config: &Path, ov: &Overrides, out: &Option<PathBuf>) -> CliResult<()> {
    let fc = FileConfig::load(config).map_err(usage)?;
    let experiment = fc.experiment(ov).map_err(usage)?;
    let rows = run_timing(&experiment, BENCH_REPETITIONS).map_err(classify)?;
    emit(out, &io::bench_csv(&rows))
}
