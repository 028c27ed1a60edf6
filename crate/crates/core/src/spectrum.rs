//! Spectrum values the estimators maximize, evaluated allocation-free.
//!
//! Both spectra measure how nearly a candidate location's (coupled)
//! steering vector falls outside the noise subspace: the reciprocal of a
//! residual power, large exactly where a source can sit. Grid scans call
//! these evaluators millions of times, so each evaluator owns its scratch
//! buffers and a `value` call performs no heap allocation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::array::{
    coupling_matrix, exact_steering_into, transform_into, ArrayConfig, CouplingVector,
};
use crate::error::{Error, Result};

/// Value reported where a spectrum denominator vanishes.
///
/// A denominator below the reciprocal of this cap (or a Gram matrix too
/// singular to factor) means the candidate is indistinguishable from a
/// perfect fit at working precision; the spectrum is capped there and the
/// evaluation counted as clamped.
pub const SPECTRUM_CLAMP: f64 = 1e18;

/// Relative ridge added to the Gram matrix diagonal before factoring.
///
/// The Gram matrix is positive semidefinite and becomes exactly singular in
/// noiseless data at the true location; a ridge of `1e-12` times the mean
/// diagonal keeps the factorization defined while staying far below any
/// estimation noise.
const RIDGE: f64 = 1e-12;

fn validate_noise_basis(cfg: &ArrayConfig, uw: &DMatrix<Complex64>) -> Result<()> {
    let m = cfg.num_elements();
    if uw.nrows() != m {
        return Err(Error::Dimension(format!(
            "noise basis has {} rows, array has {m} elements",
            uw.nrows()
        )));
    }
    if uw.ncols() == 0 || uw.ncols() >= m {
        return Err(Error::Dimension(format!(
            "noise basis must have between 1 and {} columns (got {})",
            m - 1,
            uw.ncols()
        )));
    }
    Ok(())
}

/// Evaluator of the rank-reduced spectrum used when coupling is unknown.
///
/// At a candidate `(theta, r)` the coupled steering vector factors as
/// `X(theta, r) c` with `c` the unknown normalized coupling vector. The
/// spectrum value is the reciprocal of the smallest noise-subspace residual
/// power over all admissible `c`:
///
/// ```text
/// value = 1 / min { c^H Omega c : first entry of c = 1 },
/// Omega = (U_w^H X)^H (U_w^H X)
/// ```
///
/// which by constrained-quadratic elimination equals the leading entry of
/// `Omega^{-1}`. The evaluator computes it as the squared norm of the first
/// column of the inverse Cholesky factor, after adding the relative ridge.
pub struct RankReducedEvaluator {
    cfg: ArrayConfig,
    uw: Vec<Complex64>,
    k: usize,
    clamp_count: u64,
    steering: Vec<Complex64>,
    transform: Vec<Complex64>,
    projected: Vec<Complex64>,
    gram: Vec<Complex64>,
    solve: Vec<Complex64>,
}

impl RankReducedEvaluator {
    /// Builds an evaluator for one noise basis.
    pub fn new(cfg: &ArrayConfig, uw: &DMatrix<Complex64>) -> Result<Self> {
        validate_noise_basis(cfg, uw)?;
        let m = cfg.num_elements();
        let k = uw.ncols();
        let p = cfg.coupling_terms();
        Ok(Self {
            cfg: cfg.clone(),
            uw: uw.as_slice().to_vec(),
            k,
            clamp_count: 0,
            steering: vec![Complex64::default(); m],
            transform: vec![Complex64::default(); m * p],
            projected: vec![Complex64::default(); k * p],
            gram: vec![Complex64::default(); p * p],
            solve: vec![Complex64::default(); p],
        })
    }

    /// Number of evaluations that hit the clamp so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    /// Spectrum value at one candidate location.
    pub fn value(&mut self, doa_deg: f64, range_wl: f64) -> f64 {
        let m = self.cfg.num_elements();
        let p = self.cfg.coupling_terms();
        let k = self.k;
        exact_steering_into(&self.cfg, doa_deg, range_wl, &mut self.steering);
        transform_into(&self.steering, m, p, &mut self.transform);

        // projected = U_w^H X, column-major k x p.
        for col in 0..p {
            let x_col = &self.transform[col * m..(col + 1) * m];
            for row in 0..k {
                let u_col = &self.uw[row * m..(row + 1) * m];
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    acc += u_col[i].conj() * x_col[i];
                }
                self.projected[col * k + row] = acc;
            }
        }

        // gram = projected^H projected, Hermitian p x p; fill lower triangle.
        for j in 0..p {
            let wj = &self.projected[j * k..(j + 1) * k];
            for i in j..p {
                let wi = &self.projected[i * k..(i + 1) * k];
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..k {
                    acc += wi[t].conj() * wj[t];
                }
                self.gram[j * p + i] = acc;
            }
        }

        let trace: f64 = (0..p).map(|i| self.gram[i * p + i].re).sum();
        if !(trace > 0.0) {
            // The noise subspace annihilates every transform column.
            self.clamp_count += 1;
            return SPECTRUM_CLAMP;
        }
        let ridge = RIDGE * trace / p as f64;
        for i in 0..p {
            self.gram[i * p + i] += ridge;
        }

        // In-place lower Cholesky of the Gram matrix.
        for j in 0..p {
            let mut diag = self.gram[j * p + j].re;
            for t in 0..j {
                diag -= self.gram[t * p + j].norm_sqr();
            }
            if !(diag > 0.0) {
                self.clamp_count += 1;
                return SPECTRUM_CLAMP;
            }
            let l_jj = diag.sqrt();
            self.gram[j * p + j] = Complex64::new(l_jj, 0.0);
            for i in (j + 1)..p {
                let mut acc = self.gram[j * p + i];
                for t in 0..j {
                    acc -= self.gram[t * p + i] * self.gram[t * p + j].conj();
                }
                self.gram[j * p + i] = acc / l_jj;
            }
        }

        // Forward-substitute L z = e1; the value is |z|^2.
        let mut value = 0.0;
        for i in 0..p {
            let mut acc = if i == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for t in 0..i {
                acc -= self.gram[t * p + i] * self.solve[t];
            }
            let z = acc / self.gram[i * p + i].re;
            self.solve[i] = z;
            value += z.norm_sqr();
        }

        if !value.is_finite() || value > SPECTRUM_CLAMP {
            self.clamp_count += 1;
            return SPECTRUM_CLAMP;
        }
        value
    }
}

/// Evaluator of the classical 2D MUSIC spectrum with a known coupling matrix.
///
/// The value at `(theta, r)` is the reciprocal of the noise-subspace power
/// of the coupled steering vector, `1 / |U_w^H C a(theta, r)|^2`. Usable
/// only with an oracle coupling matrix; serves as the accuracy and timing
/// baseline for the rank-reduced estimators.
pub struct MusicEvaluator {
    cfg: ArrayConfig,
    uw: Vec<Complex64>,
    k: usize,
    coupling: Vec<Complex64>,
    clamp_count: u64,
    steering: Vec<Complex64>,
    coupled: Vec<Complex64>,
}

impl MusicEvaluator {
    /// Builds an evaluator for one noise basis and one coupling vector.
    pub fn new(
        cfg: &ArrayConfig,
        uw: &DMatrix<Complex64>,
        coupling: &CouplingVector,
    ) -> Result<Self> {
        validate_noise_basis(cfg, uw)?;
        let c = coupling_matrix(cfg, coupling)?;
        let m = cfg.num_elements();
        Ok(Self {
            cfg: cfg.clone(),
            uw: uw.as_slice().to_vec(),
            k: uw.ncols(),
            coupling: c.as_slice().to_vec(),
            clamp_count: 0,
            steering: vec![Complex64::default(); m],
            coupled: vec![Complex64::default(); m],
        })
    }

    /// Number of evaluations that hit the clamp so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    /// Spectrum value at one candidate location.
    pub fn value(&mut self, doa_deg: f64, range_wl: f64) -> f64 {
        let m = self.cfg.num_elements();
        exact_steering_into(&self.cfg, doa_deg, range_wl, &mut self.steering);

        // coupled = C a, with C stored column-major.
        for i in 0..m {
            self.coupled[i] = Complex64::new(0.0, 0.0);
        }
        for j in 0..m {
            let aj = self.steering[j];
            let c_col = &self.coupling[j * m..(j + 1) * m];
            for i in 0..m {
                self.coupled[i] += c_col[i] * aj;
            }
        }

        // denominator = |U_w^H coupled|^2.
        let mut denom = 0.0;
        for row in 0..self.k {
            let u_col = &self.uw[row * m..(row + 1) * m];
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..m {
                acc += u_col[i].conj() * self.coupled[i];
            }
            denom += acc.norm_sqr();
        }

        if denom < 1.0 / SPECTRUM_CLAMP {
            self.clamp_count += 1;
            return SPECTRUM_CLAMP;
        }
        1.0 / denom
    }
}

/// One-shot rank-reduced spectrum value.
///
/// Convenience wrapper over [`RankReducedEvaluator`] for callers that need
/// a single value rather than a grid scan.
pub fn rank_reduced_value(
    cfg: &ArrayConfig,
    uw: &DMatrix<Complex64>,
    doa_deg: f64,
    range_wl: f64,
) -> Result<f64> {
    Ok(RankReducedEvaluator::new(cfg, uw)?.value(doa_deg, range_wl))
}

/// One-shot MUSIC spectrum value with known coupling.
pub fn music_value(
    cfg: &ArrayConfig,
    uw: &DMatrix<Complex64>,
    coupling: &CouplingVector,
    doa_deg: f64,
    range_wl: f64,
) -> Result<f64> {
    Ok(MusicEvaluator::new(cfg, uw, coupling)?.value(doa_deg, range_wl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{exact_steering, selection_matrices, SourcePosition};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn demo_array(p: usize) -> ArrayConfig {
        ArrayConfig::new(5, 0.5, p).unwrap()
    }

    /// Random orthonormal noise basis, built by Gram-Schmidt on random data.
    fn random_noise_basis(m: usize, k: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(m, k, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let qr = raw.qr();
        qr.q().columns(0, k).into_owned()
    }

    /// Independent evaluation: build the Gram matrix with nalgebra products
    /// and eliminate the constraint by a Schur-complement solve.
    fn elimination_oracle(cfg: &ArrayConfig, uw: &DMatrix<Complex64>, doa: f64, range: f64) -> f64 {
        let pos = SourcePosition::new(cfg, doa, range).unwrap();
        let a = exact_steering(cfg, &pos);
        let p = cfg.coupling_terms();
        let mut x = DMatrix::zeros(cfg.num_elements(), p);
        for (idx, e) in selection_matrices(cfg).iter().enumerate() {
            x.set_column(idx, &(e * &a));
        }
        let w = uw.adjoint() * x;
        let mut omega = w.adjoint() * &w;
        let trace: f64 = (0..p).map(|i| omega[(i, i)].re).sum();
        let ridge = 1e-12 * trace / p as f64;
        for i in 0..p {
            omega[(i, i)] += Complex64::new(ridge, 0.0);
        }
        let minimum = if p == 1 {
            omega[(0, 0)].re
        } else {
            let sub = omega.view((1, 1), (p - 1, p - 1)).into_owned();
            let rhs = omega.view((1, 0), (p - 1, 1)).into_owned();
            let solved = sub
                .lu()
                .solve(&rhs)
                .expect("ridged Gram block is invertible");
            let cross = omega.view((0, 1), (1, p - 1)).into_owned();
            (omega[(0, 0)] - (cross * solved)[(0, 0)]).re
        };
        1.0 / minimum
    }

    #[test]
    fn matches_the_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for p in 1..=3 {
            let cfg = demo_array(p);
            let uw = random_noise_basis(5, 3, 99 + p as u64);
            let mut ev = RankReducedEvaluator::new(&cfg, &uw).unwrap();
            for _ in 0..20 {
                let doa = rng.random_range(1.0..89.0);
                let range = rng.random_range(2.0..7.5);
                let got = ev.value(doa, range);
                let want = elimination_oracle(&cfg, &uw, doa, range);
                assert_relative_eq!(got, want, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn single_term_spectrum_equals_identity_music() {
        let cfg = demo_array(1);
        let uw = random_noise_basis(5, 4, 7);
        let identity = CouplingVector::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let mut rr = RankReducedEvaluator::new(&cfg, &uw).unwrap();
        let mut mu = MusicEvaluator::new(&cfg, &uw, &identity).unwrap();
        // The rank-reduced path adds its relative ridge before inverting,
        // so agreement is at the 1e-12 ridge level rather than exact.
        for doa in [10.0, 35.5, 62.0, 90.0] {
            for range in [2.0, 3.3, 6.5] {
                let a = rr.value(doa, range);
                let b = mu.value(doa, range);
                assert_relative_eq!(a, b, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn unitary_rotation_of_the_basis_changes_nothing() {
        let cfg = demo_array(3);
        let uw = random_noise_basis(5, 3, 31);
        // Random unitary from the QR of a random square matrix.
        let q = random_noise_basis(3, 3, 77);
        let rotated = &uw * &q;
        let mut ev1 = RankReducedEvaluator::new(&cfg, &uw).unwrap();
        let mut ev2 = RankReducedEvaluator::new(&cfg, &rotated).unwrap();
        for doa in [15.0, 44.0, 73.0] {
            for range in [2.2, 4.4, 7.0] {
                assert_relative_eq!(
                    ev1.value(doa, range),
                    ev2.value(doa, range),
                    max_relative = 1e-11
                );
            }
        }
    }

    #[test]
    fn annihilated_candidate_clamps() {
        // Build a noise basis orthogonal to every transform column at one
        // location: take the orthogonal complement of span(X).
        let cfg = demo_array(3);
        let pos = SourcePosition::new(&cfg, 40.0, 3.0).unwrap();
        let a = exact_steering(&cfg, &pos);
        let mut x = DMatrix::zeros(5, 3);
        for (idx, e) in selection_matrices(&cfg).iter().enumerate() {
            x.set_column(idx, &(e * &a));
        }
        let qr = x.clone().qr();
        let q_full = {
            // Complete the column span to a full unitary via QR of [X I].
            let mut ext = DMatrix::zeros(5, 8);
            ext.columns_mut(0, 3).copy_from(&qr.q().columns(0, 3));
            ext.columns_mut(3, 5).copy_from(&DMatrix::identity(5, 5));
            ext.qr().q()
        };
        let uw = q_full.columns(3, 2).into_owned();
        let leak = (uw.adjoint() * &x)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(leak < 1e-12, "complement construction leaked {leak}");
        let mut ev = RankReducedEvaluator::new(&cfg, &uw).unwrap();
        let v = ev.value(40.0, 3.0);
        assert_eq!(v, SPECTRUM_CLAMP);
        assert_eq!(ev.clamp_count(), 1);
    }

    #[test]
    fn music_clamps_on_vanishing_denominator() {
        let cfg = demo_array(3);
        let pos = SourcePosition::new(&cfg, 55.0, 4.0).unwrap();
        let coupling = crate::sim::generate_coupling(3, 4).unwrap();
        let c = coupling_matrix(&cfg, &coupling).unwrap();
        let u = c * exact_steering(&cfg, &pos);
        // Noise basis = orthogonal complement of the coupled steering.
        let mut ext = DMatrix::zeros(5, 6);
        ext.columns_mut(0, 1)
            .copy_from(&DMatrix::from_columns(&[u.column(0).into_owned()]));
        ext.columns_mut(1, 5).copy_from(&DMatrix::identity(5, 5));
        let q = ext.qr().q();
        let uw = q.columns(1, 4).into_owned();
        let mut ev = MusicEvaluator::new(&cfg, &uw, &coupling).unwrap();
        assert_eq!(ev.value(55.0, 4.0), SPECTRUM_CLAMP);
        assert_eq!(ev.clamp_count(), 1);
        // Away from the planted location the value is finite.
        assert!(ev.value(20.0, 4.0) < SPECTRUM_CLAMP);
    }

    #[test]
    fn hand_rolled_cholesky_agrees_with_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = 3;
            let raw = DMatrix::from_fn(p, p, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let spd = &raw * raw.adjoint() + DMatrix::identity(p, p) * Complex64::new(0.1, 0.0);
            // Reference value through nalgebra's Cholesky.
            let chol = spd.clone().cholesky().unwrap();
            let e1 = DVector::from_fn(p, |i, _| {
                if i == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let want = chol.solve(&e1)[0].re;
            // The evaluator's factorization path, driven directly.
            let mut gram: Vec<Complex64> = spd.as_slice().to_vec();
            let mut solve = vec![Complex64::default(); p];
            for j in 0..p {
                let mut diag = gram[j * p + j].re;
                for t in 0..j {
                    diag -= gram[t * p + j].norm_sqr();
                }
                let l_jj = diag.sqrt();
                gram[j * p + j] = Complex64::new(l_jj, 0.0);
                for i in (j + 1)..p {
                    let mut acc = gram[j * p + i];
                    for t in 0..j {
                        acc -= gram[t * p + i] * gram[t * p + j].conj();
                    }
                    gram[j * p + i] = acc / l_jj;
                }
            }
            let mut got = 0.0;
            for i in 0..p {
                let mut acc = if i == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for t in 0..i {
                    acc -= gram[t * p + i] * solve[t];
                }
                let z = acc / gram[i * p + i].re;
                solve[i] = z;
                got += z.norm_sqr();
            }
            // e1^H Omega^{-1} e1 equals |L^{-1} e1|^2.
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_noise_basis() {
        let cfg = demo_array(2);
        assert!(RankReducedEvaluator::new(&cfg, &random_noise_basis(4, 2, 1)).is_err());
        assert!(RankReducedEvaluator::new(&cfg, &DMatrix::<Complex64>::zeros(5, 0)).is_err());
        assert!(RankReducedEvaluator::new(&cfg, &random_noise_basis(5, 5, 1)).is_err());
    }
}
