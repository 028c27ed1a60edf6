//! CSV serialization for every command input and output.
//!
//! All files are plain comma-separated tables with a fixed header and no
//! quoting; floats are written with Rust's shortest round-trip formatting,
//! so writing and re-reading a file reproduces the numbers bit for bit.

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

use nfloc_core::array::CouplingVector;
use nfloc_core::mc::{BenchRow, McResultRow};
use nfloc_core::sim::SnapshotMatrix;

pub const SNAPSHOT_HEADER: &str = "element,snapshot,re,im";
pub const COUPLING_HEADER: &str = "source,term,re,im";
pub const MC_HEADER: &str =
    "method,snr_db,doa_true_deg,range_true_wl,rmse_doa_deg,rmse_range_wl,mean_iters,trials_used";
pub const BENCH_HEADER: &str =
    "method,doa_grid_points,range_grid_points,median_time_s,ratio_vs_music";
pub const ESTIMATE_HEADER: &str = "method,source,doa_deg,range_wl,peak_value,iterations,converged";

/// One estimated location, for the `estimate` command's output.
pub struct EstimateRow {
    pub method: &'static str,
    /// Peak rank within the method's output, strongest first.
    pub source: usize,
    pub doa_deg: f64,
    pub range_wl: f64,
    pub peak_value: f64,
    pub iterations: u32,
    pub converged: bool,
}

pub fn write_snapshots(y: &SnapshotMatrix) -> String {
    let mut out = String::with_capacity(32 * y.len() + 32);
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for t in 0..y.ncols() {
        for i in 0..y.nrows() {
            let z = y[(i, t)];
            out.push_str(&format!("{i},{t},{},{}\n", z.re, z.im));
        }
    }
    out
}

fn split_fields<'a>(line: &'a str, want: usize, what: &str, lineno: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != want {
        bail!(
            "{what} line {lineno}: expected {want} fields, found {}",
            fields.len()
        );
    }
    Ok(fields)
}

fn parse_num<T: std::str::FromStr>(field: &str, what: &str, lineno: usize) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    field
        .trim()
        .parse()
        .with_context(|| format!("{what} line {lineno}: cannot parse {field:?}"))
}

/// Parses a snapshot table back into an array-by-time matrix.
///
/// Every (element, snapshot) pair must appear exactly once and elements
/// must match the configured array size.
pub fn read_snapshots(text: &str, num_elements: usize) -> Result<SnapshotMatrix> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == SNAPSHOT_HEADER => {}
        _ => bail!("snapshot file must start with the header {SNAPSHOT_HEADER:?}"),
    }
    let mut cells: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut max_snapshot = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let f = split_fields(line, 4, "snapshot file", lineno)?;
        let element: usize = parse_num(f[0], "snapshot file", lineno)?;
        let snapshot: usize = parse_num(f[1], "snapshot file", lineno)?;
        let re: f64 = parse_num(f[2], "snapshot file", lineno)?;
        let im: f64 = parse_num(f[3], "snapshot file", lineno)?;
        if element >= num_elements {
            bail!("snapshot file line {lineno}: element {element} outside the {num_elements}-element array");
        }
        max_snapshot = max_snapshot.max(snapshot);
        cells.push((element, snapshot, Complex64::new(re, im)));
    }
    if cells.is_empty() {
        bail!("snapshot file contains no data rows");
    }
    let cols = max_snapshot + 1;
    let mut slots: Vec<Option<Complex64>> = vec![None; num_elements * cols];
    for (element, snapshot, z) in cells {
        let slot = &mut slots[snapshot * num_elements + element];
        if slot.is_some() {
            bail!("snapshot file repeats element {element}, snapshot {snapshot}");
        }
        *slot = Some(z);
    }
    let data: Vec<Complex64> = slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.with_context(|| {
                format!(
                    "snapshot file is missing element {}, snapshot {}",
                    i % num_elements,
                    i / num_elements
                )
            })
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_vec(num_elements, cols, data))
}

pub fn write_coupling(couplings: &[CouplingVector]) -> String {
    let mut out = String::new();
    out.push_str(COUPLING_HEADER);
    out.push('\n');
    for (s, c) in couplings.iter().enumerate() {
        for (p, z) in c.coeffs().iter().enumerate() {
            out.push_str(&format!("{s},{p},{},{}\n", z.re, z.im));
        }
    }
    out
}

/// Parses coupling vectors; sources and terms must be contiguous from zero.
pub fn read_coupling(text: &str) -> Result<Vec<CouplingVector>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == COUPLING_HEADER => {}
        _ => bail!("coupling file must start with the header {COUPLING_HEADER:?}"),
    }
    let mut rows: Vec<(usize, usize, Complex64)> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let f = split_fields(line, 4, "coupling file", lineno)?;
        let source: usize = parse_num(f[0], "coupling file", lineno)?;
        let term: usize = parse_num(f[1], "coupling file", lineno)?;
        let re: f64 = parse_num(f[2], "coupling file", lineno)?;
        let im: f64 = parse_num(f[3], "coupling file", lineno)?;
        rows.push((source, term, Complex64::new(re, im)));
    }
    if rows.is_empty() {
        bail!("coupling file contains no data rows");
    }
    let num_sources = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let mut out = Vec::with_capacity(num_sources);
    for s in 0..num_sources {
        let mut terms: Vec<(usize, Complex64)> = rows
            .iter()
            .filter(|r| r.0 == s)
            .map(|r| (r.1, r.2))
            .collect();
        terms.sort_by_key(|t| t.0);
        let expected: Vec<usize> = (0..terms.len()).collect();
        let got: Vec<usize> = terms.iter().map(|t| t.0).collect();
        if got != expected {
            bail!("coupling file: source {s} terms are not contiguous from 0 (found {got:?})");
        }
        let coeffs: Vec<Complex64> = terms.into_iter().map(|t| t.1).collect();
        out.push(
            CouplingVector::new(coeffs).with_context(|| format!("coupling file: source {s}"))?,
        );
    }
    Ok(out)
}

pub fn mc_csv(rows: &[McResultRow]) -> String {
    let mut out = String::new();
    out.push_str(MC_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method,
            r.snr_db,
            r.doa_true_deg,
            r.range_true_wl,
            r.rmse_doa_deg,
            r.rmse_range_wl,
            r.mean_iterations,
            r.trials_used
        ));
    }
    out
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    out.push_str(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.doa_grid_points, r.range_grid_points, r.median_time_s, r.ratio_vs_music
        ));
    }
    out
}

pub fn estimate_csv(rows: &[EstimateRow]) -> String {
    let mut out = String::new();
    out.push_str(ESTIMATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method, r.source, r.doa_deg, r.range_wl, r.peak_value, r.iterations, r.converged
        ));
    }
    out
}

pub fn estimate_text(rows: &[EstimateRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{} source {}: doa {:.4} deg, range {:.4} wl (peak {:.6e}, {} rounds, {})\n",
            r.method,
            r.source,
            r.doa_deg,
            r.range_wl,
            r.peak_value,
            r.iterations,
            if r.converged {
                "converged"
            } else {
                "not converged"
            }
        ));
    }
    out
}
