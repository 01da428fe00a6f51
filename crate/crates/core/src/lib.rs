//! Low-rank estimation by truncated eigendecomposition of spectral-norm
//! surrogates, with calculators for the accompanying error bounds and a
//! numerical verifier for the reference-matrix construction behind them.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] dense symmetric eigensolver, truncation, norms, angles.
//! * [`bounds`] closed-form error bounds, cutoff rules and sample thresholds.
//! * [`probe`] envelope/aligned-subspace construction and lemma checks.
//! * [`estimators`] completion, denoising and reduced-rank covariance.
//! * [`synth`] seeded generators for spectra, bases, masks, noise and samples.
//! * [`harness`] Monte-Carlo experiment runner and report aggregation.
//! * [`io`] text formats, config parsing and report serialization.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod probe;
pub mod synth;

pub use error::{Error, Result};
