//! Near-field source localization for uniform linear arrays whose mutual
//! coupling is unknown and direction dependent.
//!
//! A source inside the Fresnel region of an array produces a spherical
//! wavefront, so its direction of arrival and its range are jointly
//! observable. This crate models the received snapshots with the exact
//! per-element propagation distances, and estimates (DOA, range) pairs from
//! the noise subspace of the sample covariance with three estimators:
//!
//! - [`estimators::music_known_coupling`]: the classical 2D MUSIC search,
//!   usable only when the coupling matrix is known (an oracle baseline).
//! - [`estimators::algorithm1`]: a 2D search over a rank-reduced spectrum
//!   that eliminates the unknown coupling coefficients in closed form.
//! - [`estimators::algorithm2`]: the same spectrum searched as a sequence of
//!   1D scans (direction sweeps over a ladder of pinned ranges, then
//!   alternating range and direction refinement), trading one 2D search for
//!   a few 1D ones.
//!
//! [`mc`] drives Monte-Carlo RMSE-versus-SNR sweeps and timing comparisons
//! over these estimators with reproducible seeding.

pub mod array;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod mc;
pub mod peaks;
pub mod sim;
pub mod spectrum;
pub mod subspace;

pub use error::{Error, Result};
