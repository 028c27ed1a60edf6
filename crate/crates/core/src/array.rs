//! Array geometry, steering vectors, and the mutual-coupling machinery.
//!
//! All lengths are expressed in carrier wavelengths (the wavelength is
//! normalized to 1), angles in degrees. Elements of the uniform linear array
//! are indexed by a signed offset `m` running from `-(M-1)/2` to `(M-1)/2`,
//! with the center element `m = 0` serving as the phase and amplitude
//! reference; every vector and matrix in the crate orders elements by
//! ascending `m`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cosine of an angle in degrees, exact at multiples of 90.
///
/// The exact cases keep structural identities (such as a flat steering
/// vector broadside to the array) free of floating-point residue.
pub fn cos_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        1.0
    } else if r == 90.0 || r == 270.0 {
        0.0
    } else if r == 180.0 {
        -1.0
    } else {
        deg.to_radians().cos()
    }
}

/// Sine of an angle in degrees, exact at multiples of 90.
pub fn sin_deg(deg: f64) -> f64 {
    cos_deg(deg - 90.0)
}

/// Geometry of a uniform linear array and the size of its coupling support.
///
/// `coupling_terms` is the number of distinct coupling coefficients: element
/// pairs separated by that many positions or more are taken as uncoupled,
/// which bands the coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    num_elements: usize,
    spacing_wl: f64,
    coupling_terms: usize,
}

impl ArrayConfig {
    /// Builds a validated configuration.
    ///
    /// Requires an odd `num_elements >= 3` (so a center reference element
    /// exists), `spacing_wl > 0`, and `1 <= coupling_terms < num_elements`.
    pub fn new(num_elements: usize, spacing_wl: f64, coupling_terms: usize) -> Result<Self> {
        if num_elements < 3 || num_elements % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "num_elements must be odd and >= 3 (got {num_elements})"
            )));
        }
        if !(spacing_wl > 0.0) || !spacing_wl.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "spacing_wl must be positive and finite (got {spacing_wl})"
            )));
        }
        if coupling_terms < 1 || coupling_terms >= num_elements {
            return Err(Error::InvalidConfig(format!(
                "coupling_terms must satisfy 1 <= P < M (got P={coupling_terms}, M={num_elements})"
            )));
        }
        Ok(Self {
            num_elements,
            spacing_wl,
            coupling_terms,
        })
    }

    /// Number of elements M.
    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Element spacing d in wavelengths.
    pub fn spacing_wl(&self) -> f64 {
        self.spacing_wl
    }

    /// Number of coupling coefficients P.
    pub fn coupling_terms(&self) -> usize {
        self.coupling_terms
    }

    /// Largest element offset, `(M - 1) / 2`.
    pub fn half_span(&self) -> i64 {
        ((self.num_elements - 1) / 2) as i64
    }

    /// Signed element offsets in ascending order.
    pub fn element_offsets(&self) -> impl Iterator<Item = i64> {
        let h = self.half_span();
        -h..=h
    }

    /// Aperture D = (M - 1) d in wavelengths.
    pub fn aperture_wl(&self) -> f64 {
        (self.num_elements - 1) as f64 * self.spacing_wl
    }

    /// The Fresnel interval `(0.62 sqrt(D^3), 2 D^2)` in wavelengths.
    ///
    /// Sources inside this open interval show enough wavefront curvature for
    /// the range to be observable while the exact-distance model stays valid.
    pub fn fresnel_interval_wl(&self) -> (f64, f64) {
        let d = self.aperture_wl();
        (0.62 * (d * d * d).sqrt(), 2.0 * d * d)
    }
}

/// A validated source location: direction of arrival and range.
///
/// The DOA lives in `[0, 90]` degrees (a linear array cannot tell a
/// direction from its mirror image, so the searchable cone is half-open),
/// and the range must lie inside the array's Fresnel interval and beyond
/// half the aperture (a source closer than that could sit on an element).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePosition {
    doa_deg: f64,
    range_wl: f64,
}

impl SourcePosition {
    /// Validates and builds a position for the given array.
    pub fn new(cfg: &ArrayConfig, doa_deg: f64, range_wl: f64) -> Result<Self> {
        if !doa_deg.is_finite() || !(0.0..=90.0).contains(&doa_deg) {
            return Err(Error::Domain(format!(
                "doa_deg must lie in [0, 90] (got {doa_deg})"
            )));
        }
        let (lo, hi) = cfg.fresnel_interval_wl();
        if !range_wl.is_finite() || range_wl <= lo || range_wl >= hi {
            return Err(Error::Domain(format!(
                "range_wl must lie inside the Fresnel interval ({lo:.4}, {hi:.4}) (got {range_wl})"
            )));
        }
        if range_wl <= cfg.aperture_wl() / 2.0 {
            return Err(Error::Domain(format!(
                "range_wl must exceed half the aperture {} (got {range_wl})",
                cfg.aperture_wl() / 2.0
            )));
        }
        Ok(Self { doa_deg, range_wl })
    }

    /// Direction of arrival in degrees.
    pub fn doa_deg(&self) -> f64 {
        self.doa_deg
    }

    /// Range in wavelengths.
    pub fn range_wl(&self) -> f64 {
        self.range_wl
    }
}

/// Distance from a source at `(doa_deg, range_wl)` to element `m`.
///
/// This is the law-of-cosines distance
/// `sqrt(r^2 + (m d)^2 - 2 m d r cos(theta))`; `m = 0` returns the range
/// itself exactly. Arguments are taken raw (only the geometry guard is
/// applied) so callers can probe the model outside the validated Fresnel
/// region, e.g. for symmetry checks.
pub fn element_distance(cfg: &ArrayConfig, m: i64, doa_deg: f64, range_wl: f64) -> Result<f64> {
    if m.unsigned_abs() as usize > cfg.half_span() as usize {
        return Err(Error::Dimension(format!(
            "element offset {m} outside +/-{}",
            cfg.half_span()
        )));
    }
    if m == 0 {
        return Ok(range_wl);
    }
    let md = m as f64 * cfg.spacing_wl();
    let radicand = range_wl * range_wl + md * md - 2.0 * md * range_wl * cos_deg(doa_deg);
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "source coincides with element {m} (radicand {radicand:.3e})"
        )));
    }
    Ok(radicand.sqrt())
}

/// Exact spherical-wavefront steering vector.
///
/// Entry `m` is `(r0 / rm) * exp(-j 2 pi (rm - r0))` with `rm` the true
/// distance to element `m`: the amplitude follows the spherical spreading
/// ratio and the phase the true path-length difference. The reference entry
/// `m = 0` is exactly `1 + 0j`.
pub fn exact_steering(cfg: &ArrayConfig, pos: &SourcePosition) -> DVector<Complex64> {
    let mut out = DVector::zeros(cfg.num_elements());
    exact_steering_into(cfg, pos.doa_deg(), pos.range_wl(), out.as_mut_slice());
    out
}

/// Fills `out` with the exact steering vector, allocation free.
///
/// The caller guarantees the geometry is valid (range beyond half the
/// aperture), which makes every radicand strictly positive.
pub(crate) fn exact_steering_into(
    cfg: &ArrayConfig,
    doa_deg: f64,
    range_wl: f64,
    out: &mut [Complex64],
) {
    debug_assert_eq!(out.len(), cfg.num_elements());
    let d = cfg.spacing_wl();
    let r0 = range_wl;
    let two_cos = 2.0 * cos_deg(doa_deg) * r0;
    let h = cfg.half_span();
    for (slot, m) in out.iter_mut().zip(-h..=h) {
        if m == 0 {
            *slot = Complex64::new(1.0, 0.0);
            continue;
        }
        let md = m as f64 * d;
        let rm = (r0 * r0 + md * md - md * two_cos).sqrt();
        let phase = -std::f64::consts::TAU * (rm - r0);
        *slot = Complex64::from_polar(r0 / rm, phase);
    }
}

/// Second-order (Fresnel) approximation of the exact steering vector.
///
/// Entries are unit magnitude with phase `gamma m + eta m^2`, where
/// `gamma = 2 pi d cos(theta)` and `eta = -pi d^2 sin^2(theta) / r0` are the
/// first two Taylor terms of the exact phase in the element offset; the
/// spherical amplitude taper is dropped.
pub fn fresnel_steering(cfg: &ArrayConfig, pos: &SourcePosition) -> DVector<Complex64> {
    let gamma = std::f64::consts::TAU * cfg.spacing_wl() * cos_deg(pos.doa_deg());
    let s = sin_deg(pos.doa_deg());
    let eta = -std::f64::consts::PI * cfg.spacing_wl().powi(2) * s * s / pos.range_wl();
    DVector::from_iterator(
        cfg.num_elements(),
        cfg.element_offsets().map(|m| {
            let mf = m as f64;
            Complex64::from_polar(1.0, gamma * mf + eta * mf * mf)
        }),
    )
}

/// First-order (far-field) steering vector: unit-magnitude, linear phase.
///
/// The limit of the Fresnel form as the range grows without bound; only the
/// DOA remains observable.
pub fn farfield_steering(cfg: &ArrayConfig, doa_deg: f64) -> DVector<Complex64> {
    let gamma = std::f64::consts::TAU * cfg.spacing_wl() * cos_deg(doa_deg);
    DVector::from_iterator(
        cfg.num_elements(),
        cfg.element_offsets()
            .map(|m| Complex64::from_polar(1.0, gamma * m as f64)),
    )
}

/// A normalized vector of mutual-coupling coefficients.
///
/// Entry `p` couples element pairs separated by `p` positions; the
/// self-coupling entry is fixed to exactly 1 (the normalization every
/// estimator in this crate relies on) and magnitudes must not increase with
/// separation, since coupling decays with element distance.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    coeffs: Vec<Complex64>,
}

impl CouplingVector {
    /// Validates and wraps coefficient values.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyInput("coupling vector".into()));
        }
        if coeffs[0] != Complex64::new(1.0, 0.0) {
            return Err(Error::InvalidConfig(format!(
                "coupling vector must be normalized with first entry 1 (got {})",
                coeffs[0]
            )));
        }
        for p in 1..coeffs.len() {
            if coeffs[p].norm() > coeffs[p - 1].norm() {
                return Err(Error::InvalidConfig(format!(
                    "coupling magnitudes must be non-increasing (|c[{}]| = {} > |c[{}]| = {})",
                    p,
                    coeffs[p].norm(),
                    p - 1,
                    coeffs[p - 1].norm()
                )));
            }
        }
        Ok(Self { coeffs })
    }

    /// Coefficient slice, self-coupling first.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Number of coefficients P.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// Always false; the vector holds at least the self-coupling entry.
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The banded symmetric Toeplitz coupling matrix.
///
/// `C[i][j] = c[|i - j|]` when `|i - j| < P` and 0 otherwise: a coefficient
/// per element-separation distance, zero beyond the coupling support.
pub fn coupling_matrix(cfg: &ArrayConfig, c: &CouplingVector) -> Result<DMatrix<Complex64>> {
    if c.len() != cfg.coupling_terms() {
        return Err(Error::Dimension(format!(
            "coupling vector has {} entries, array expects {}",
            c.len(),
            cfg.coupling_terms()
        )));
    }
    let m = cfg.num_elements();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        let sep = i.abs_diff(j);
        if sep < c.len() {
            c.coeffs()[sep]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Binary masks of the coupling matrix, one per coefficient.
///
/// Matrix `p` has ones exactly where elements are separated by `p`
/// positions, so any banded symmetric Toeplitz coupling matrix is the
/// coefficient-weighted sum of these masks. The first mask is the identity.
pub fn selection_matrices(cfg: &ArrayConfig) -> Vec<DMatrix<Complex64>> {
    let m = cfg.num_elements();
    (0..cfg.coupling_terms())
        .map(|p| {
            DMatrix::from_fn(m, m, |i, j| {
                if i.abs_diff(j) == p {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

/// The steering-dependent matrix that linearizes coupling.
///
/// Column `p` holds the selection mask of separation `p` applied to the
/// steering vector, so for every normalized coupling vector `c` the product
/// of a coupling matrix and a steering vector factors exactly as
/// `X(theta, r) c`. This turns the unknown coupling into a linear factor the
/// estimators can eliminate.
pub fn transform_matrix(
    cfg: &ArrayConfig,
    steering: &DVector<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let m = cfg.num_elements();
    if steering.len() != m {
        return Err(Error::Dimension(format!(
            "steering vector has {} entries, array has {m}",
            steering.len()
        )));
    }
    let p_terms = cfg.coupling_terms();
    let mut x = DMatrix::zeros(m, p_terms);
    transform_into(steering.as_slice(), m, p_terms, x.as_mut_slice());
    Ok(x)
}

/// Fills a column-major `M x P` slice with the transform-matrix entries.
///
/// Column `p` at row `i` is `a[i - p] + a[i + p]` (terms kept only while in
/// range), with the `p = 0` column the steering vector itself.
pub(crate) fn transform_into(a: &[Complex64], m: usize, p_terms: usize, out: &mut [Complex64]) {
    debug_assert_eq!(out.len(), m * p_terms);
    for p in 0..p_terms {
        let col = &mut out[p * m..(p + 1) * m];
        if p == 0 {
            col.copy_from_slice(a);
            continue;
        }
        for (i, slot) in col.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            if i >= p {
                s += a[i - p];
            }
            if i + p < m {
                s += a[i + p];
            }
            *slot = s;
        }
    }
}
