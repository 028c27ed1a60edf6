//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of model construction, decomposition, and estimation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates a structural requirement.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A numeric input left the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation required a non-empty input.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// The matrix handed to the eigendecomposition is not Hermitian.
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    /// A peak search found fewer local maxima than requested.
    #[error("found {found} local maxima, needed {needed}")]
    TooFewPeaks { found: usize, needed: usize },

    /// Too many per-trial estimator failures in one Monte-Carlo cell.
    #[error(
        "excessive estimator failures: {failures}/{trials} trials failed for \
         method {method} at snr {snr_db} dB, doa {doa_deg} deg ({detail})"
    )]
    ExcessiveFailures {
        method: String,
        snr_db: f64,
        doa_deg: f64,
        failures: usize,
        trials: usize,
        detail: String,
    },
}
