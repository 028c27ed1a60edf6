//! Local-maximum selection on sampled spectra.
//!
//! Estimators scan a spectrum over a grid and then pick the `n` strongest
//! strict local maxima. A node counts as a peak only when its value exceeds
//! every existing neighbor, so plateaus produce no peak at all; ties between
//! distinct peaks break toward the lower index so selection is deterministic.

use crate::error::{Error, Result};

fn select_strongest(mut peaks: Vec<(usize, f64)>, n: usize) -> Result<Vec<usize>> {
    if peaks.len() < n {
        return Err(Error::TooFewPeaks {
            found: peaks.len(),
            needed: n,
        });
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    peaks.truncate(n);
    Ok(peaks.into_iter().map(|(idx, _)| idx).collect())
}

/// Indices of every strict local maximum of a sampled curve, ranked by
/// descending value with ties toward the lower index. Endpoints qualify by
/// beating their single inner neighbor.
pub(crate) fn ranked_maxima_1d(values: &[f64]) -> Vec<usize> {
    let len = values.len();
    let mut peaks = Vec::new();
    for i in 0..len {
        let above_left = i == 0 || values[i] > values[i - 1];
        let above_right = i + 1 == len || values[i] > values[i + 1];
        if above_left && above_right {
            peaks.push((i, values[i]));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    peaks.into_iter().map(|(idx, _)| idx).collect()
}

/// Indices of the `n` strongest strict local maxima of a sampled curve.
///
/// Endpoints qualify by beating their single inner neighbor. Results come
/// ordered by descending value. Errors when fewer than `n` maxima exist.
pub fn find_peaks_1d(values: &[f64], n: usize) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("peak search over an empty curve".into()));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("peak count must be at least 1".into()));
    }
    let ranked = ranked_maxima_1d(values);
    if ranked.len() < n {
        return Err(Error::TooFewPeaks {
            found: ranked.len(),
            needed: n,
        });
    }
    Ok(ranked.into_iter().take(n).collect())
}

/// Row-column indices of the `n` strongest strict local maxima of a sampled
/// surface, stored row-major as `values[row * cols + col]`.
///
/// Neighbors are the four axis-adjacent nodes; edge and corner nodes compare
/// against the neighbors they have. Results come ordered by descending
/// value, ties toward the lower linear index. Errors when fewer than `n`
/// maxima exist.
pub fn find_peaks_2d(
    values: &[f64],
    rows: usize,
    cols: usize,
    n: usize,
) -> Result<Vec<(usize, usize)>> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyInput(
            "peak search over an empty surface".into(),
        ));
    }
    if values.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "surface with {rows} rows and {cols} cols needs {} values (got {})",
            rows * cols,
            values.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("peak count must be at least 1".into()));
    }
    let mut peaks = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let beats = |rr: usize, cc: usize| v > values[rr * cols + cc];
            let is_peak = (r == 0 || beats(r - 1, c))
                && (r + 1 == rows || beats(r + 1, c))
                && (c == 0 || beats(r, c - 1))
                && (c + 1 == cols || beats(r, c + 1));
            if is_peak {
                peaks.push((r * cols + c, v));
            }
        }
    }
    let flat = select_strongest(peaks, n)?;
    Ok(flat
        .into_iter()
        .map(|idx| (idx / cols, idx % cols))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_maximum_found() {
        assert_eq!(find_peaks_1d(&[1.0, 3.0, 2.0], 1).unwrap(), vec![1]);
    }

    #[test]
    fn endpoints_qualify() {
        assert_eq!(find_peaks_1d(&[3.0, 1.0, 2.0], 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn peaks_come_ordered_by_value() {
        let v = [0.0, 2.0, 0.0, 5.0, 0.0, 3.0, 0.0];
        assert_eq!(find_peaks_1d(&v, 3).unwrap(), vec![3, 5, 1]);
    }

    #[test]
    fn ties_break_toward_lower_index() {
        let v = [1.0, 5.0, 1.0, 5.0, 1.0];
        assert_eq!(find_peaks_1d(&v, 2).unwrap(), vec![1, 3]);
    }

    #[test]
    fn plateau_is_not_a_peak() {
        let err = find_peaks_1d(&[2.0, 2.0, 2.0], 1).unwrap_err();
        match err {
            Error::TooFewPeaks { found, needed } => {
                assert_eq!(found, 0);
                assert_eq!(needed, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn too_few_maxima_is_an_error() {
        assert!(find_peaks_1d(&[1.0, 3.0, 2.0], 2).is_err());
    }

    #[test]
    fn surface_bump_center_found() {
        let rows = 21;
        let cols = 17;
        let mut v = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let dr = r as f64 - 8.0;
                let dc = c as f64 - 11.0;
                v[r * cols + c] = (-(dr * dr + dc * dc) / 20.0).exp();
            }
        }
        assert_eq!(find_peaks_2d(&v, rows, cols, 1).unwrap(), vec![(8, 11)]);
    }

    #[test]
    fn surface_peaks_ordered_and_corner_allowed() {
        let rows = 5;
        let cols = 5;
        let mut v = vec![0.0; rows * cols];
        v[0] = 4.0; // corner peak
        v[2 * cols + 2] = 9.0; // interior peak
        let got = find_peaks_2d(&v, rows, cols, 2).unwrap();
        assert_eq!(got, vec![(2, 2), (0, 0)]);
    }

    #[test]
    fn surface_ridge_plateau_rejected() {
        // A flat ridge along one row: no node strictly beats its ridge
        // neighbors, so nothing qualifies.
        let rows = 3;
        let cols = 4;
        let mut v = vec![0.0; rows * cols];
        for c in 0..cols {
            v[cols + c] = 1.0;
        }
        assert!(find_peaks_2d(&v, rows, cols, 1).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(find_peaks_2d(&[1.0; 5], 2, 3, 1).is_err());
    }
}
