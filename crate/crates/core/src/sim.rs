//! Snapshot simulation: random coupling draws, source symbols, noise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array::{coupling_matrix, exact_steering, ArrayConfig, CouplingVector, SourcePosition};
use crate::error::{Error, Result};

/// Received snapshots, one column per time sample, rows ordered by element.
pub type SnapshotMatrix = DMatrix<Complex64>;

/// Ground truth for one simulated source.
#[derive(Debug, Clone)]
pub struct SourceTruth {
    position: SourcePosition,
    coupling: CouplingVector,
    power: f64,
}

impl SourceTruth {
    /// Builds a source with explicit linear power (0 silences the source).
    pub fn new(position: SourcePosition, coupling: CouplingVector, power: f64) -> Result<Self> {
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "source power must be finite and >= 0 (got {power})"
            )));
        }
        Ok(Self {
            position,
            coupling,
            power,
        })
    }

    /// Builds a unit-power source, the default everywhere.
    pub fn unit_power(position: SourcePosition, coupling: CouplingVector) -> Self {
        Self {
            position,
            coupling,
            power: 1.0,
        }
    }

    /// Ground-truth location.
    pub fn position(&self) -> &SourcePosition {
        &self.position
    }

    /// Ground-truth coupling coefficients.
    pub fn coupling(&self) -> &CouplingVector {
        &self.coupling
    }

    /// Linear signal power.
    pub fn power(&self) -> f64 {
        self.power
    }
}

/// Everything a snapshot simulation needs.
///
/// `snr_db` may be `f64::INFINITY` for a noiseless run. The noise variance
/// is `10^(-snr_db / 10)` relative to unit reference power, measured at the
/// reference element where steering entries have magnitude 1.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub array: ArrayConfig,
    pub sources: Vec<SourceTruth>,
    pub snapshots: usize,
    pub snr_db: f64,
    pub seed: u64,
}

/// Noise variance for a given SNR in decibels.
pub fn noise_variance(snr_db: f64) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!(
            "snr_db must be finite or +inf (got {snr_db})"
        )));
    }
    Ok(10f64.powf(-snr_db / 10.0))
}

/// One step of the splitmix64 output mixer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream seed from a master seed and a context path.
///
/// Mixing is a fixed chain of splitmix64 steps, so the result depends only
/// on the values supplied, never on execution order or thread count. Used to
/// give every Monte-Carlo trial (and every purpose within a trial) its own
/// independent random stream.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix(master);
    for &p in parts {
        h = splitmix(h ^ p);
    }
    h
}

/// One draw from the circular complex Gaussian with the given variance.
///
/// Real and imaginary parts are independent normals with half the variance
/// each, so the complex modulus squared has the requested expectation.
fn circular_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Draws a matrix of independent circular complex Gaussians.
///
/// Entries are drawn in column-major order, which fixes the stream layout
/// for reproducibility.
fn circular_gaussian_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> DMatrix<Complex64> {
    let data: Vec<Complex64> = (0..rows * cols)
        .map(|_| circular_gaussian(rng, variance))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Draws a random normalized coupling vector.
///
/// The self-coupling entry is exactly 1; each further magnitude is the
/// previous one shrunk by a uniform factor in (0.3, 0.7) with a uniform
/// phase, so magnitudes decay strictly with element separation.
/// Deterministic given the seed.
pub fn generate_coupling(p_terms: usize, seed: u64) -> Result<CouplingVector> {
    if p_terms < 1 {
        return Err(Error::InvalidConfig(
            "coupling needs at least 1 term".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::with_capacity(p_terms);
    coeffs.push(Complex64::new(1.0, 0.0));
    let mut mag = 1.0;
    for _ in 1..p_terms {
        mag *= rng.random_range(0.3..0.7);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        coeffs.push(Complex64::from_polar(mag, phase));
    }
    CouplingVector::new(coeffs)
}

/// Simulates the received snapshot matrix.
///
/// Each source contributes its coupled steering vector scaled by an
/// independent stream of circular Gaussian symbols at the source's power;
/// white circular Gaussian noise is added per element. Sources are
/// re-validated against the configured array. Deterministic given the seed:
/// symbols are drawn per source in listed order, then the noise block.
pub fn simulate_snapshots(cfg: &SimulationConfig) -> Result<SnapshotMatrix> {
    let m = cfg.array.num_elements();
    let l = cfg.snapshots;
    if l < 1 {
        return Err(Error::InvalidConfig("snapshots must be >= 1".into()));
    }
    let sigma2 = noise_variance(cfg.snr_db)?;

    // Coupled steering vector per source, with the position re-validated for
    // this array (a SourceTruth may have been built against another one).
    let mut coupled: Vec<DVector<Complex64>> = Vec::with_capacity(cfg.sources.len());
    for src in &cfg.sources {
        let pos = SourcePosition::new(
            &cfg.array,
            src.position().doa_deg(),
            src.position().range_wl(),
        )?;
        let a = exact_steering(&cfg.array, &pos);
        let c = coupling_matrix(&cfg.array, src.coupling())?;
        coupled.push(c * a);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let symbols: Vec<DVector<Complex64>> = cfg
        .sources
        .iter()
        .map(|src| DVector::from_fn(l, |_, _| circular_gaussian(&mut rng, src.power())))
        .collect();
    let mut y = circular_gaussian_matrix(&mut rng, m, l, sigma2);

    for (u, s) in coupled.iter().zip(&symbols) {
        for (t, mut col) in y.column_iter_mut().enumerate() {
            col.axpy(s[t], u, Complex64::new(1.0, 0.0));
        }
    }
    Ok(y)
}
