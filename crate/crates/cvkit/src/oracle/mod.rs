//! Non-neural reference computations.
//!
//! Everything trained elsewhere in the crate can be cross-checked here:
//! finite-difference discretizations of the generator and their spectra,
//! Ulam (bin-counting) estimates of the transfer operator, PCA, effective
//! one-dimensional dynamics along a collective variable, and conditional
//! moments of lagged pairs.

pub mod effective;
pub mod generator;
pub mod grid;
pub mod linalg;
pub mod pca;
pub mod ulam;

pub use effective::{conditional_moments, effective_1d, BinMoments, CoordinateCv, Effective1d, GridCv, ScalarCv};
pub use generator::{bochner_check, check_grid_resolution, fd_generator, slowness_objective, FdOperator, SmoothField, SlownessValue};
pub use grid::{Grid2D, GridFunction};
pub use pca::{pca, PcaResult};
pub use ulam::{lemma1_check, ulam_spectrum, ulam_transfer, BinSpec, UlamModel};

/// How the eigenvalues of an [`EigenResult`] are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumOrder {
    /// Generator convention: `0 = l0 <= l1 <= ...`
    Ascending,
    /// Transfer convention: `1 = nu0 >= nu1 >= ...`
    Descending,
}

/// Eigenvalues with eigenfunctions orthonormal in a discrete weighted
/// inner product (`sum_i w_i f_i g_i`).
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// One function per eigenvalue, as node or bin values.
    pub functions: Vec<Vec<f64>>,
    /// Weights of the inner product the functions are orthonormal in.
    pub weights: Vec<f64>,
    pub order: SpectrumOrder,
}

impl EigenResult {
    /// Largest deviation of `<f_i, f_j>_w` from `delta_ij`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.functions.len() {
            for j in i..self.functions.len() {
                let dot: f64 = self.functions[i]
                    .iter()
                    .zip(&self.functions[j])
                    .zip(&self.weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }
}

/// Fix the sign of an eigenfunction: its value at `anchor` must be
/// non-negative; if that entry is zero the next flat index decides.
pub(crate) fn fix_sign(values: &mut [f64], anchor: usize) {
    let n = values.len();
    for off in 0..n {
        let v = values[(anchor + off) % n];
        if v != 0.0 {
            if v < 0.0 {
                for x in values.iter_mut() {
                    *x = -*x;
                }
            }
            return;
        }
    }
}
