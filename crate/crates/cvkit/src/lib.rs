//! Collective-variable discovery for metastable stochastic dynamics.
//!
//! Two families of low-dimensional representations are trained from
//! trajectory data of overdamped Langevin systems:
//!
//! * leading eigenfunctions of the infinitesimal generator or of the
//!   lag-`tau` transfer operator, obtained by minimizing Rayleigh-quotient
//!   losses with soft orthonormality penalties ([`losses`]),
//! * (time-lagged) autoencoders trained on reconstruction error.
//!
//! Everything trainable is cross-checked against non-neural references:
//! finite-difference generator spectra on 2-D grids, Ulam transition
//! matrices, PCA, effective 1-D dynamics along a collective variable, and
//! string-method transition paths ([`oracle`], [`mep`]).

// Indexed loops are the clearest form for the banded/batched numeric
// kernels in this crate.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod losses;
pub mod mep;
pub mod net;
pub mod oracle;
pub mod potentials;
pub mod sampler;

pub use error::{Error, Result};

/// A state of the two-dimensional system.
pub type Point2 = [f64; 2];
