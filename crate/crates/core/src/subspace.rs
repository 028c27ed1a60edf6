//! Sample covariance and its signal/noise eigenspace split.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::SnapshotMatrix;

/// Tolerance for accepting a matrix as Hermitian.
const HERMITIAN_TOL: f64 = 1e-10;

/// Relative eigenvalue gap below which the signal/noise split is flagged.
const DEGENERATE_GAP: f64 = 1e-12;

/// Eigenvector split of a sample covariance matrix.
///
/// The signal basis spans the dominant eigenvectors (as many as there are
/// sources), the noise basis the rest; together they are unitary.
/// `degenerate_split` warns that the eigenvalue gap at the split point was
/// negligible, in which case the two spans are not meaningfully separated
/// (subspace estimators degrade gracefully; the caller decides).
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    signal: DMatrix<Complex64>,
    noise: DMatrix<Complex64>,
    eigenvalues: DVector<f64>,
    degenerate: bool,
}

impl SubspaceDecomposition {
    /// Dominant eigenvectors, one column per source.
    pub fn signal_basis(&self) -> &DMatrix<Complex64> {
        &self.signal
    }

    /// Remaining eigenvectors, orthogonal to every source direction.
    pub fn noise_basis(&self) -> &DMatrix<Complex64> {
        &self.noise
    }

    /// All eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// True when the eigenvalue gap at the split was negligible.
    pub fn degenerate_split(&self) -> bool {
        self.degenerate
    }
}

/// Sample covariance `(1/L) Y Y^H` of a snapshot matrix.
pub fn sample_covariance(y: &SnapshotMatrix) -> Result<DMatrix<Complex64>> {
    if y.ncols() == 0 || y.nrows() == 0 {
        return Err(Error::EmptyInput("snapshot matrix".into()));
    }
    let scale = Complex64::new(1.0 / y.ncols() as f64, 0.0);
    Ok(y * y.adjoint() * scale)
}

/// Eigendecomposes a Hermitian matrix into signal and noise subspaces.
///
/// Eigenvalues are sorted descending with a stable tie-break by original
/// position; the first `n_sources` eigenvectors form the signal basis.
/// Rejects non-square or non-Hermitian input and source counts that leave
/// no noise dimensions.
pub fn noise_subspace(r: &DMatrix<Complex64>, n_sources: usize) -> Result<SubspaceDecomposition> {
    let m = r.nrows();
    if m == 0 {
        return Err(Error::EmptyInput("covariance matrix".into()));
    }
    if r.ncols() != m {
        return Err(Error::Dimension(format!(
            "covariance must be square (got {}x{})",
            r.nrows(),
            r.ncols()
        )));
    }
    if n_sources < 1 || n_sources >= m {
        return Err(Error::InvalidConfig(format!(
            "source count must satisfy 1 <= N < M (got N={n_sources}, M={m})"
        )));
    }
    let mut max_asym = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let asym = (r[(i, j)] - r[(j, i)].conj()).norm();
            max_asym = max_asym.max(asym);
        }
    }
    if max_asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: max_asym,
        });
    }

    // Symmetrize the rounding residue away, then decompose.
    let h = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let trace: f64 = (0..m).map(|i| h[(i, i)].re).sum();
    let eig = h.symmetric_eigen();

    // The solver returns eigenpairs in no particular order.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a Hermitian matrix are finite")
            .then(a.cmp(&b))
    });

    let mut eigenvalues = DVector::zeros(m);
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut lambda = eig.eigenvalues[src];
        // A positive semidefinite input may round to a barely negative value.
        if lambda < 0.0 && lambda > -HERMITIAN_TOL * trace.abs().max(1.0) {
            lambda = 0.0;
        }
        eigenvalues[dst] = lambda;
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let gap = eigenvalues[n_sources - 1] - eigenvalues[n_sources];
    let degenerate = gap < DEGENERATE_GAP * trace.abs();

    Ok(SubspaceDecomposition {
        signal: vectors.columns(0, n_sources).into_owned(),
        noise: vectors.columns(n_sources, m - n_sources).into_owned(),
        eigenvalues,
        degenerate,
    })
}
