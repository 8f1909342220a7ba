//! Ulam estimation of the transfer operator from lagged pair data.
//!
//! States are binned on a regular rectangular grid (plus one overflow
//! bin for points outside it); transition counts give a row-stochastic
//! matrix, which is then symmetrized by flux averaging so detailed
//! balance holds exactly on the estimate.

use nalgebra::DMatrix;

use super::linalg::dense_symmetric_eigen;
use super::{fix_sign, EigenResult, SpectrumOrder};
use crate::{Point2, Result};

/// Regular rectangular binning of the plane.
#[derive(Debug, Clone)]
pub struct BinSpec {
    pub bounds: [[f64; 2]; 2],
    pub n1: usize,
    pub n2: usize,
}

impl BinSpec {
    pub fn new(bounds: [[f64; 2]; 2], n1: usize, n2: usize) -> Self {
        assert!(n1 >= 1 && n2 >= 1);
        assert!(bounds[0][0] < bounds[0][1] && bounds[1][0] < bounds[1][1]);
        BinSpec { bounds, n1, n2 }
    }

    /// Total number of bins including the overflow bin.
    pub fn len(&self) -> usize {
        self.n1 * self.n2 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat bin id of a point; points outside the bounds land in the
    /// overflow bin `n1 * n2`.
    pub fn bin_of(&self, x: Point2) -> usize {
        let [x1, x2] = x;
        if x1 < self.bounds[0][0]
            || x1 > self.bounds[0][1]
            || x2 < self.bounds[1][0]
            || x2 > self.bounds[1][1]
        {
            return self.n1 * self.n2;
        }
        let w1 = (self.bounds[0][1] - self.bounds[0][0]) / self.n1 as f64;
        let w2 = (self.bounds[1][1] - self.bounds[1][0]) / self.n2 as f64;
        let i = (((x1 - self.bounds[0][0]) / w1) as usize).min(self.n1 - 1);
        let j = (((x2 - self.bounds[1][0]) / w2) as usize).min(self.n2 - 1);
        i * self.n2 + j
    }

    /// Center of a non-overflow bin.
    pub fn center(&self, flat: usize) -> Point2 {
        assert!(flat < self.n1 * self.n2);
        let (i, j) = (flat / self.n2, flat % self.n2);
        let w1 = (self.bounds[0][1] - self.bounds[0][0]) / self.n1 as f64;
        let w2 = (self.bounds[1][1] - self.bounds[1][0]) / self.n2 as f64;
        [
            self.bounds[0][0] + (i as f64 + 0.5) * w1,
            self.bounds[1][0] + (j as f64 + 0.5) * w2,
        ]
    }
}

/// Bin-level Markov model estimated from pair data.
#[derive(Debug, Clone)]
pub struct UlamModel {
    pub bins: BinSpec,
    /// Original flat bin id of each retained state, ascending.
    pub state_bins: Vec<usize>,
    /// Row-stochastic transition matrix between retained states.
    pub p: Vec<Vec<f64>>,
    /// Stationary weights (sum to 1).
    pub pi: Vec<f64>,
    /// Symmetric flux matrix `F_ij = pi_i P_ij`; the ground truth for
    /// detailed balance after symmetrization.
    pub flux: Vec<Vec<f64>>,
    pub symmetrized: bool,
    /// Bins visited by pair endpoints but discarded for lacking outgoing
    /// transitions (a dataset-tail effect).
    pub dropped_bins: usize,
}

impl UlamModel {
    pub fn n_states(&self) -> usize {
        self.state_bins.len()
    }

    /// Center of retained state `s` (`None` for the overflow bin).
    pub fn state_center(&self, s: usize) -> Option<Point2> {
        let flat = self.state_bins[s];
        (flat < self.bins.n1 * self.bins.n2).then(|| self.bins.center(flat))
    }
}

/// Estimate a symmetrized transfer-operator matrix from lagged pairs.
pub fn ulam_transfer(pairs: &[(Point2, Point2)], bins: &BinSpec) -> Result<UlamModel> {
    assert!(!pairs.is_empty(), "need at least one pair");
    let nb = bins.len();
    // Raw endpoint bins.
    let mapped: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(x, y)| (bins.bin_of(*x), bins.bin_of(*y)))
        .collect();
    // Keep bins with outgoing transitions; iterate because discarding a
    // pair into a dropped bin can strand its source bin.
    let mut alive = vec![false; nb];
    for &(bx, _) in &mapped {
        alive[bx] = true;
    }
    let mut visited = vec![false; nb];
    for &(bx, by) in &mapped {
        visited[bx] = true;
        visited[by] = true;
    }
    loop {
        let mut outgoing = vec![false; nb];
        for &(bx, by) in &mapped {
            if alive[bx] && alive[by] {
                outgoing[bx] = true;
            }
        }
        let mut changed = false;
        for b in 0..nb {
            if alive[b] && !outgoing[b] {
                alive[b] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let state_bins: Vec<usize> = (0..nb).filter(|&b| alive[b]).collect();
    let dropped_bins = (0..nb).filter(|&b| visited[b] && !alive[b]).count();
    let n = state_bins.len();
    if n < 2 {
        return Err(crate::Error::TooFewBins { need: 2, got: n });
    }
    let mut index = vec![usize::MAX; nb];
    for (s, &b) in state_bins.iter().enumerate() {
        index[b] = s;
    }
    let mut counts = vec![vec![0.0f64; n]; n];
    let mut kept = 0usize;
    for &(bx, by) in &mapped {
        if alive[bx] && alive[by] {
            counts[index[bx]][index[by]] += 1.0;
            kept += 1;
        }
    }
    let total = kept as f64;
    // Occupancy and row-normalized transition probabilities.
    let row_sums: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let pi_raw: Vec<f64> = row_sums.iter().map(|&r| r / total).collect();
    // Flux symmetrization: F_ij = (pi_i P_ij + pi_j P_ji) / 2, then
    // renormalize rows. pi_i P_ij = counts_ij / total.
    let mut flux = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            flux[i][j] = 0.5 * (counts[i][j] + counts[j][i]) / total;
        }
    }
    let pi: Vec<f64> = flux.iter().map(|r| r.iter().sum()).collect();
    let mut p = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = flux[i][j] / pi[i];
        }
    }
    let _ = pi_raw;
    Ok(UlamModel {
        bins: bins.clone(),
        state_bins,
        p,
        pi,
        flux,
        symmetrized: true,
        dropped_bins,
    })
}

/// Both sides of the energy identity
/// `E_tau(f) = (1/2) sum_ij pi_i P_ij (f_j - f_i)^2 = <(I - P) f, f>_pi`,
/// returned as `(lhs, rhs, abs_err)`.
pub fn lemma1_check(model: &UlamModel, f: &[f64]) -> (f64, f64, f64) {
    let n = model.n_states();
    assert_eq!(f.len(), n);
    let mut lhs = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = f[j] - f[i];
            lhs += model.pi[i] * model.p[i][j] * d * d;
        }
    }
    lhs *= 0.5;
    let mut rhs = 0.0;
    for i in 0..n {
        let mut pf = 0.0;
        for j in 0..n {
            pf += model.p[i][j] * f[j];
        }
        rhs += model.pi[i] * (f[i] - pf) * f[i];
    }
    (lhs, rhs, (lhs - rhs).abs())
}

/// Leading `m` eigenpairs of the symmetrized transition matrix,
/// descending, eigenvectors orthonormal in the pi-weighted inner
/// product.
pub fn ulam_spectrum(model: &UlamModel, m: usize) -> Result<EigenResult> {
    let n = model.n_states();
    assert!(m >= 1 && m <= n);
    // Similarity transform A = D^{1/2} P D^{-1/2} built from the flux,
    // which is symmetric by construction.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = model.flux[i][j] / (model.pi[i] * model.pi[j]).sqrt();
        }
    }
    let (vals, vecs) = dense_symmetric_eigen(a);
    // Anchor for the deterministic sign convention.
    let anchor = (0..n)
        .min_by(|&s, &t| {
            let d = |s: usize| {
                let c = model.state_center(s).unwrap_or([f64::MAX, f64::MAX]);
                (c[0] - 1.0) * (c[0] - 1.0) + c[1] * c[1]
            };
            d(s).total_cmp(&d(t))
        })
        .unwrap();
    let mut eigenvalues = Vec::with_capacity(m);
    let mut functions = Vec::with_capacity(m);
    for k in 0..m {
        let idx = n - 1 - k; // descending
        eigenvalues.push(vals[idx]);
        let mut f: Vec<f64> = (0..n)
            .map(|i| vecs[idx][i] / model.pi[i].sqrt())
            .collect();
        fix_sign(&mut f, anchor);
        functions.push(f);
    }
    Ok(EigenResult {
        eigenvalues,
        functions,
        weights: model.pi.clone(),
        order: SpectrumOrder::Descending,
    })
}
