//! Uniform search-axis representation used by every grid scan.

use crate::error::{Error, Result};

/// A uniformly spaced closed interval of search values.
///
/// Values are generated as `start + i * step`, which keeps grids exactly
/// reproducible: node `i` is the same float no matter how the axis is
/// traversed. The number of nodes is fixed at construction so that `stop`
/// is the last node up to a tiny rounding slack.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    start: f64,
    step: f64,
    len: usize,
}

impl GridAxis {
    /// Builds an axis covering `[start, stop]` with spacing `step`.
    ///
    /// Requires `step > 0` and at least two nodes in the interval.
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "grid axis needs finite bounds and step > 0 (got start={start}, stop={stop}, step={step})"
            )));
        }
        if stop <= start {
            return Err(Error::InvalidConfig(format!(
                "grid axis needs stop > start (got start={start}, stop={stop})"
            )));
        }
        // The slack absorbs decimal steps that are not exact binary floats,
        // e.g. (7.99 - 1.76) / 0.01 evaluating to 622.99999...
        let span = (stop - start) / step;
        let len = (span + 1e-9).floor() as usize + 1;
        if len < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid axis needs at least 2 nodes (start={start}, stop={stop}, step={step})"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; axes have at least two nodes.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// First node.
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Last node.
    pub fn stop(&self) -> f64 {
        self.value(self.len - 1)
    }

    /// Spacing between adjacent nodes.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// The `i`-th node. Panics if `i` is out of bounds.
    pub fn value(&self, i: usize) -> f64 {
        assert!(
            i < self.len,
            "grid index {i} out of bounds (len {})",
            self.len
        );
        self.start + i as f64 * self.step
    }

    /// Iterator over all nodes in ascending order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.value(i))
    }

    /// Index of the node closest to `x`, clamped to the axis.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.start) / self.step).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.len - 1)
        }
    }
}
