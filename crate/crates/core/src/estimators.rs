//! Grid-search estimators for joint direction and range.
//!
//! Three estimators share one search grid:
//!
//! * [`music_known_coupling`] scans the classical 2D spectrum with an
//!   oracle coupling matrix and serves as the accuracy baseline.
//! * [`algorithm1`] scans the rank-reduced spectrum over the full 2D grid;
//!   no coupling knowledge is needed.
//! * [`algorithm2`] reaches the same optimum through alternating 1D scans
//!   from a direction-only initialization, trading the dense 2D sweep for
//!   a handful of line searches.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::array::{ArrayConfig, CouplingVector};
use crate::error::{Error, Result};
use crate::grid::GridAxis;
use crate::peaks::{find_peaks_1d, find_peaks_2d, ranked_maxima_1d};
use crate::spectrum::{MusicEvaluator, RankReducedEvaluator};

/// Rectangular search domain: a direction axis crossed with a range axis.
#[derive(Debug, Clone)]
pub struct SearchGrid {
    doa: GridAxis,
    range: GridAxis,
}

impl SearchGrid {
    /// Builds a grid; the direction axis must stay within 0 to 90 degrees.
    pub fn new(doa: GridAxis, range: GridAxis) -> Result<Self> {
        if doa.value(0) < 0.0 || doa.value(doa.len() - 1) > 90.0 {
            return Err(Error::InvalidConfig(format!(
                "direction axis {:.3} to {:.3} degrees leaves the 0 to 90 degree domain",
                doa.value(0),
                doa.value(doa.len() - 1)
            )));
        }
        Ok(Self { doa, range })
    }

    /// Direction axis in degrees.
    pub fn doa(&self) -> &GridAxis {
        &self.doa
    }

    /// Range axis in wavelengths.
    pub fn range(&self) -> &GridAxis {
        &self.range
    }

    /// Checks that every range node is a valid source range for `cfg`:
    /// inside the open Fresnel interval and beyond half the aperture.
    pub fn validate_for(&self, cfg: &ArrayConfig) -> Result<()> {
        let (lo, hi) = cfg.fresnel_interval_wl();
        let floor = lo.max(cfg.aperture_wl() / 2.0);
        let first = self.range.value(0);
        let last = self.range.value(self.range.len() - 1);
        if first <= floor || last >= hi {
            return Err(Error::InvalidConfig(format!(
                "range axis {first:.4} to {last:.4} wavelengths leaves the open interval \
                 ({floor:.4}, {hi:.4}) valid for this array"
            )));
        }
        Ok(())
    }
}

/// Outcome of one estimator run.
#[derive(Debug, Clone)]
pub struct EstimateRecord {
    /// Estimated locations as `(doa_deg, range_wl)`, strongest peak first.
    pub estimates: Vec<(f64, f64)>,
    /// Spectrum value at each estimate, in the same order.
    pub peak_values: Vec<f64>,
    /// Refinement rounds used; zero for the one-shot 2D searches.
    pub iterations: u32,
    /// Whether every refinement settled within the iteration budget; the
    /// one-shot searches always report true.
    pub converged: bool,
    /// Whether any spectrum evaluation hit the singular-value clamp. Routine
    /// in noiseless data, where the spectrum is unbounded at the truth.
    pub clamped: bool,
    /// Wall-clock duration of the run in seconds.
    pub wall_time_s: f64,
}

fn validate_num_sources(num_sources: usize) -> Result<()> {
    if num_sources == 0 {
        return Err(Error::InvalidConfig(
            "source count must be at least 1".into(),
        ));
    }
    Ok(())
}

fn scan_2d(grid: &SearchGrid, mut value: impl FnMut(f64, f64) -> f64) -> Vec<f64> {
    let rows = grid.doa.len();
    let cols = grid.range.len();
    let mut out = Vec::with_capacity(rows * cols);
    for ti in 0..rows {
        let theta = grid.doa.value(ti);
        for ri in 0..cols {
            out.push(value(theta, grid.range.value(ri)));
        }
    }
    out
}

fn peaks_to_record(
    grid: &SearchGrid,
    surface: &[f64],
    num_sources: usize,
    clamped: bool,
    started: Instant,
) -> Result<EstimateRecord> {
    let peaks = find_peaks_2d(surface, grid.doa.len(), grid.range.len(), num_sources)?;
    let estimates = peaks
        .iter()
        .map(|&(ti, ri)| (grid.doa.value(ti), grid.range.value(ri)))
        .collect();
    let peak_values = peaks
        .iter()
        .map(|&(ti, ri)| surface[ti * grid.range.len() + ri])
        .collect();
    Ok(EstimateRecord {
        estimates,
        peak_values,
        iterations: 0,
        converged: true,
        clamped,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Full 2D MUSIC search with a known coupling vector.
pub fn music_known_coupling(
    cfg: &ArrayConfig,
    noise_basis: &DMatrix<Complex64>,
    coupling: &CouplingVector,
    grid: &SearchGrid,
    num_sources: usize,
) -> Result<EstimateRecord> {
    let started = Instant::now();
    validate_num_sources(num_sources)?;
    grid.validate_for(cfg)?;
    let mut ev = MusicEvaluator::new(cfg, noise_basis, coupling)?;
    let surface = scan_2d(grid, |t, r| ev.value(t, r));
    peaks_to_record(grid, &surface, num_sources, ev.clamp_count() > 0, started)
}

/// Full 2D rank-reduced search; coupling never enters.
pub fn algorithm1(
    cfg: &ArrayConfig,
    noise_basis: &DMatrix<Complex64>,
    grid: &SearchGrid,
    num_sources: usize,
) -> Result<EstimateRecord> {
    let started = Instant::now();
    validate_num_sources(num_sources)?;
    grid.validate_for(cfg)?;
    let mut ev = RankReducedEvaluator::new(cfg, noise_basis)?;
    let surface = scan_2d(grid, |t, r| ev.value(t, r));
    peaks_to_record(grid, &surface, num_sources, ev.clamp_count() > 0, started)
}

fn validate_range_pin(cfg: &ArrayConfig, range_wl: f64) -> Result<()> {
    let (lo, hi) = cfg.fresnel_interval_wl();
    let floor = lo.max(cfg.aperture_wl() / 2.0);
    if !(range_wl > floor && range_wl < hi) {
        return Err(Error::Domain(format!(
            "pinned range {range_wl:.4} wavelengths leaves the open interval ({floor:.4}, {hi:.4})"
        )));
    }
    Ok(())
}

/// Pinned ranges for the initialization sweeps: a geometric ladder from the
/// first to the last range node with rungs at most a quarter octave apart.
/// The spectrum's direction ridge drifts with range, so the ladder needs a
/// rung close enough to any range in the window that the source's direction
/// peak dominates that rung's sweep; a quarter octave keeps some pin within
/// about nine percent of every reachable range.
fn range_pin_ladder(range_axis: &GridAxis) -> Vec<f64> {
    let lo = range_axis.value(0);
    let hi = range_axis.value(range_axis.len() - 1);
    if !(hi > lo) {
        return vec![lo];
    }
    let ratio = hi / lo;
    let rungs = (ratio.ln() / (std::f64::consts::LN_2 / 4.0))
        .ceil()
        .max(1.0) as usize;
    (0..=rungs)
        .map(|k| lo * ratio.powf(k as f64 / rungs as f64))
        .collect()
}

fn initial_doa_indices(
    ev: &mut RankReducedEvaluator,
    doa_axis: &GridAxis,
    pinned_range_wl: f64,
    num_sources: usize,
) -> Result<Vec<usize>> {
    let curve: Vec<f64> = doa_axis
        .values()
        .map(|t| ev.value(t, pinned_range_wl))
        .collect();
    find_peaks_1d(&curve, num_sources)
}

/// Direction-only initialization for the alternating search.
///
/// Scans the rank-reduced spectrum along the direction axis with the range
/// pinned at `pinned_range_wl` and returns the strongest peak angle. The
/// spectrum's direction structure is stable in range, so a single
/// representative range recovers the direction to within a few grid steps.
pub fn initial_doa(
    cfg: &ArrayConfig,
    noise_basis: &DMatrix<Complex64>,
    doa_axis: &GridAxis,
    pinned_range_wl: f64,
) -> Result<f64> {
    if doa_axis.value(0) < 0.0 || doa_axis.value(doa_axis.len() - 1) > 90.0 {
        return Err(Error::InvalidConfig(
            "direction axis leaves the 0 to 90 degree domain".into(),
        ));
    }
    validate_range_pin(cfg, pinned_range_wl)?;
    let mut ev = RankReducedEvaluator::new(cfg, noise_basis)?;
    let idx = initial_doa_indices(&mut ev, doa_axis, pinned_range_wl, 1)?[0];
    Ok(doa_axis.value(idx))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// One refinement: range and direction line scans in turn until the
/// direction estimate stops moving, from a fixed starting direction node.
fn alternate_scans(
    ev: &mut RankReducedEvaluator,
    grid: &SearchGrid,
    start_ti: usize,
    tol_steps: f64,
    max_iter: u32,
    range_curve: &mut [f64],
    doa_curve: &mut [f64],
) -> (usize, usize, bool, u32) {
    let mut ti = start_ti;
    let mut ri = 0;
    let mut converged = false;
    let mut rounds = 0u32;
    for _ in 0..max_iter {
        rounds += 1;
        let theta = grid.doa.value(ti);
        for (j, slot) in range_curve.iter_mut().enumerate() {
            *slot = ev.value(theta, grid.range.value(j));
        }
        ri = argmax(range_curve);
        let range = grid.range.value(ri);
        for (i, slot) in doa_curve.iter_mut().enumerate() {
            *slot = ev.value(grid.doa.value(i), range);
        }
        let ti_new = argmax(doa_curve);
        let moved_steps = (ti_new as f64 - ti as f64).abs();
        ti = ti_new;
        if moved_steps < tol_steps {
            converged = true;
            break;
        }
    }
    (ti, ri, converged, rounds)
}

/// Hill climb from a node to a strict local maximum of the sampled
/// surface, considering all eight neighbors. Every move strictly increases
/// the value, so the climb terminates; ties keep the first candidate in
/// scan order, which keeps the result deterministic. Returns the node and
/// its value.
fn climb_to_local_max(
    ev: &mut RankReducedEvaluator,
    grid: &SearchGrid,
    mut ti: usize,
    mut ri: usize,
) -> (usize, usize, f64) {
    let mut here = ev.value(grid.doa.value(ti), grid.range.value(ri));
    loop {
        let mut best = (here, ti, ri);
        for t in ti.saturating_sub(1)..=(ti + 1).min(grid.doa.len() - 1) {
            for r in ri.saturating_sub(1)..=(ri + 1).min(grid.range.len() - 1) {
                if t == ti && r == ri {
                    continue;
                }
                let v = ev.value(grid.doa.value(t), grid.range.value(r));
                if v > best.0 {
                    best = (v, t, r);
                }
            }
        }
        if best.1 == ti && best.2 == ri {
            return (ti, ri, here);
        }
        (here, ti, ri) = best;
    }
}

/// Alternating 1D search: direction sweeps over a ladder of pinned ranges
/// seed per-source refinements of range and direction line scans in turn,
/// run once per seeding rung. Each refinement escapes its resting node
/// along the direction axis while a neighboring direction node's best
/// range beats its value, then climbs to the local 2D maximum around it;
/// each source keeps the highest-finishing refinement whose node no
/// earlier source claimed, so the reported sources are distinct strict
/// maxima of the grid. The result matches the node the full 2D search
/// reports whenever a ladder start lies in the basin of the spectrum's
/// peak or escapes into it, at the cost of a small number of 1D sweeps.
///
/// `q_deg` is the convergence tolerance on the direction move between
/// rounds, compared in whole grid steps so floating-point noise in node
/// values cannot stall or terminate the loop spuriously. `max_iter` caps
/// the rounds of each refinement; a refinement that runs out marks the
/// record as not converged but still reports its final state. The record's
/// `iterations` is the round count of the kept refinement, including the
/// rounds its escape restarts spend, maximized over sources; the wall time
/// accounts for everything the search evaluated.
pub fn algorithm2(
    cfg: &ArrayConfig,
    noise_basis: &DMatrix<Complex64>,
    grid: &SearchGrid,
    num_sources: usize,
    q_deg: f64,
    max_iter: u32,
) -> Result<EstimateRecord> {
    let started = Instant::now();
    validate_num_sources(num_sources)?;
    grid.validate_for(cfg)?;
    if !(q_deg > 0.0 && q_deg.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "convergence tolerance must be positive and finite (got {q_deg})"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidConfig(
            "iteration budget must be at least 1".into(),
        ));
    }
    let mut ev = RankReducedEvaluator::new(cfg, noise_basis)?;

    // Initialize from 1D scans alone: sweep the direction axis once per
    // rung of a short pinned-range ladder and rank each sweep's strict
    // maxima. One pinned range is not enough; when the pin sits far from a
    // source's true range the direction peak shifts by a few steps and the
    // refinement then settles on a nearby ridge node instead of the
    // spectrum's peak. Every rung that resolves a source contributes its
    // matching-ranked maximum and the next one down as starting points,
    // and the refinements below keep whichever start climbs highest.
    let ladder = range_pin_ladder(grid.range());
    let mut curve = vec![0.0; grid.doa.len()];
    let mut rung_peaks: Vec<Vec<usize>> = Vec::with_capacity(ladder.len());
    for &pin in &ladder {
        for (i, slot) in curve.iter_mut().enumerate() {
            *slot = ev.value(grid.doa.value(i), pin);
        }
        let mut ranked = ranked_maxima_1d(&curve);
        ranked.truncate(num_sources + 1);
        rung_peaks.push(ranked);
    }

    // Whole grid steps worth of direction move below which a round counts
    // as converged.
    let tol_steps = (q_deg / grid.doa.step()).max(0.0);

    let mut estimates = Vec::with_capacity(num_sources);
    let mut peak_values = Vec::with_capacity(num_sources);
    let mut worst_iterations = 0u32;
    let mut all_converged = true;
    let mut range_curve = vec![0.0; grid.range.len()];
    let mut doa_curve = vec![0.0; grid.doa.len()];
    let mut claimed: Vec<(usize, usize)> = Vec::with_capacity(num_sources);

    for slot in 0..num_sources {
        // The slot's starts: its rank across the rung sweeps plus each
        // rung's next-ranked maximum, deduplicated. The runner-up matters
        // when a rung's strongest maximum is a sidelobe: the sweep then
        // ranks the true lobe one place lower and without the runner-up
        // no start would sit in the peak's basin.
        let mut starts: Vec<usize> = rung_peaks
            .iter()
            .filter_map(|p| p.get(slot).copied())
            .collect();
        if starts.is_empty() {
            return Err(Error::TooFewPeaks {
                found: slot,
                needed: num_sources,
            });
        }
        starts.extend(rung_peaks.iter().filter_map(|p| p.get(slot + 1).copied()));
        let mut seen = vec![false; grid.doa.len()];
        starts.retain(|&ti| !std::mem::replace(&mut seen[ti], true));

        // Alternate from every start and keep the highest finishing value
        // among nodes no earlier source claimed. Starts from different
        // rungs often settle on the same node; ties prefer the refinement
        // that needed fewer rounds, then the earlier rung, so the choice
        // and the reported round count stay deterministic and reflect the
        // cheapest path to the kept node.
        //
        // Each refinement also gets to escape its resting node before the
        // comparison. A converged pair can rest one direction node off the
        // spectrum's peak when the peak's ridge runs diagonally through
        // the grid: the direction scan at the pair's range cannot see the
        // peak and the range scan at the pair's direction cannot either,
        // and the stalled value can then lose the comparison to a sidelobe
        // the grid resolves cleanly. Probing the neighboring direction
        // nodes with fresh range scans looks along the ridge instead; when
        // a probe beats the resting value the alternation restarts there.
        // Every escape strictly increases the resting value, so the loop
        // terminates; at a true peak both probes fail at once and nothing
        // is spent beyond them.
        let mut best: Option<(f64, usize, usize, bool, u32)> = None;
        for &start_ti in &starts {
            let (mut ti, mut ri, mut converged, mut rounds) = alternate_scans(
                &mut ev,
                grid,
                start_ti,
                tol_steps,
                max_iter,
                &mut range_curve,
                &mut doa_curve,
            );
            let mut value = ev.value(grid.doa.value(ti), grid.range.value(ri));
            let mut escapes = 0;
            while escapes < grid.doa.len() {
                let mut probe: Option<(f64, usize)> = None;
                let left = ti.checked_sub(1);
                let right = if ti + 1 < grid.doa.len() {
                    Some(ti + 1)
                } else {
                    None
                };
                for tj in [left, right].into_iter().flatten() {
                    let theta = grid.doa.value(tj);
                    for (j, slot) in range_curve.iter_mut().enumerate() {
                        *slot = ev.value(theta, grid.range.value(j));
                    }
                    let vj = range_curve[argmax(&range_curve)];
                    if vj > value && probe.as_ref().map_or(true, |p| vj > p.0) {
                        probe = Some((vj, tj));
                    }
                }
                let Some((_, tj)) = probe else { break };
                escapes += 1;
                let (nti, nri, nconverged, nrounds) = alternate_scans(
                    &mut ev,
                    grid,
                    tj,
                    tol_steps,
                    max_iter,
                    &mut range_curve,
                    &mut doa_curve,
                );
                value = ev.value(grid.doa.value(nti), grid.range.value(nri));
                ti = nti;
                ri = nri;
                converged &= nconverged;
                rounds = rounds.saturating_add(nrounds);
            }

            // Axis-aligned scans can also come to rest diagonally adjacent
            // to a peak; a local climb over all eight neighbors walks that
            // last step. Climbing before the comparison pins every
            // candidate to a strict local maximum of the grid, so the
            // claimed-node test below cannot be fooled by a refinement
            // resting one node away from an earlier source's peak.
            let (ti, ri, value) = climb_to_local_max(&mut ev, grid, ti, ri);
            if claimed.contains(&(ti, ri)) {
                continue;
            }
            let better = best
                .as_ref()
                .map_or(true, |b| value > b.0 || (value == b.0 && rounds < b.4));
            if better {
                best = Some((value, ti, ri, converged, rounds));
            }
        }
        let Some((value, ti, ri, converged, rounds)) = best else {
            // Every refinement climbed into a node an earlier source owns:
            // the grid shows fewer separated peaks than requested sources.
            return Err(Error::TooFewPeaks {
                found: slot,
                needed: num_sources,
            });
        };

        claimed.push((ti, ri));
        estimates.push((grid.doa.value(ti), grid.range.value(ri)));
        peak_values.push(value);
        worst_iterations = worst_iterations.max(rounds);
        all_converged &= converged;
    }

    Ok(EstimateRecord {
        estimates,
        peak_values,
        iterations: worst_iterations,
        converged: all_converged,
        clamped: ev.clamp_count() > 0,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
