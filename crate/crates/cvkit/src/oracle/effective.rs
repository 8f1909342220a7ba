//! Effective one-dimensional dynamics along a scalar collective variable
//! and conditional moments of lagged pairs.
//!
//! A scalar CV `xi` induces a reversible diffusion on its range with
//! stationary density `Q(z)` and mobility `a(z) = E[|grad xi|^2 | xi = z]`.
//! Both are estimated by binning samples on `z = xi(x)`; the discrete
//! divergence-form generator built from them yields the effective
//! relaxation rate `lambda_tilde_1`, which bounds the true rate from
//! above and matches it when `xi` is the first eigenfunction.

use nalgebra::DMatrix;

use super::grid::{Grid2D, GridFunction};
use super::linalg::dense_symmetric_eigen;
use crate::net::MlpModel;
use crate::potentials::{Potential, Thermo};
use crate::{Error, Point2, Result};

/// Scalar collective variable with an evaluable gradient.
pub trait ScalarCv: Sync {
    fn value(&self, x: Point2) -> f64;
    fn gradient(&self, x: Point2) -> Point2;
    /// Action of the generator on the CV, when closed forms exist;
    /// reported as a per-bin drift diagnostic.
    fn generator_action(&self, _x: Point2, _p: &Potential, _th: Thermo) -> Option<f64> {
        None
    }
}

impl ScalarCv for MlpModel {
    fn value(&self, x: Point2) -> f64 {
        self.forward(&x)[0]
    }

    fn gradient(&self, x: Point2) -> Point2 {
        let g = self.input_gradient(&x);
        [g[0], g[1]]
    }
}

/// CV given by bilinear interpolation of a grid function; gradients come
/// from the interpolated node-gradient field.
pub struct GridCv<'a> {
    grid: &'a Grid2D,
    values: &'a GridFunction,
    gx: GridFunction,
    gy: GridFunction,
}

impl<'a> GridCv<'a> {
    pub fn new(grid: &'a Grid2D, values: &'a GridFunction) -> Self {
        let (gx, gy) = grid.node_gradients(values);
        GridCv {
            grid,
            values,
            gx,
            gy,
        }
    }
}

impl ScalarCv for GridCv<'_> {
    fn value(&self, x: Point2) -> f64 {
        self.grid.interp(self.values, x)
    }

    fn gradient(&self, x: Point2) -> Point2 {
        [self.grid.interp(&self.gx, x), self.grid.interp(&self.gy, x)]
    }
}

/// The coordinate map `x -> x[axis]`.
pub struct CoordinateCv(pub usize);

impl ScalarCv for CoordinateCv {
    fn value(&self, x: Point2) -> f64 {
        x[self.0]
    }

    fn gradient(&self, _x: Point2) -> Point2 {
        let mut g = [0.0, 0.0];
        g[self.0] = 1.0;
        g
    }

    fn generator_action(&self, x: Point2, p: &Potential, _th: Thermo) -> Option<f64> {
        // L x_axis = -dV/dx_axis (the Laplacian term vanishes).
        Some(-p.gradient(x)[self.0])
    }
}

/// Per-bin diagnostics of the effective generator construction.
#[derive(Debug, Clone)]
pub struct EffectiveBin {
    pub z_center: f64,
    /// Fraction of samples in the bin (the discrete `Q`).
    pub mass: f64,
    /// Mean of `|grad xi|^2` in the bin.
    pub mobility: f64,
    pub count: usize,
    /// Mean of `L xi` in the bin when the CV provides it.
    pub mean_drift: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Effective1d {
    /// Smallest nonzero eigenvalue of the effective generator.
    pub lambda1: f64,
    pub bins: Vec<EffectiveBin>,
}

/// Estimate the effective relaxation rate of the dynamics projected onto
/// a scalar CV, from samples of the invariant measure.
///
/// Samples are grouped into `n_bins` equal-count bins of `z = xi(x)`;
/// the 1-D divergence-form generator `(1/beta) Q^{-1} d/dz (Q a d/dz .)`
/// with reflecting ends is assembled on the bin centers and
/// diagonalized.
pub fn effective_1d(
    samples: &[Point2],
    cv: &dyn ScalarCv,
    potential: &Potential,
    thermo: Thermo,
    n_bins: usize,
) -> Result<Effective1d> {
    if n_bins < 3 {
        return Err(Error::TooFewBins {
            need: 3,
            got: n_bins,
        });
    }
    let n = samples.len();
    if n < n_bins {
        return Err(Error::EmptyBin(n / n_bins.max(1)));
    }
    let zs: Vec<f64> = samples.iter().map(|&x| cv.value(x)).collect();
    let mob: Vec<f64> = samples
        .iter()
        .map(|&x| {
            let g = cv.gradient(x);
            g[0] * g[0] + g[1] * g[1]
        })
        .collect();
    let drifts: Vec<Option<f64>> = samples
        .iter()
        .map(|&x| cv.generator_action(x, potential, thermo))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| zs[a].total_cmp(&zs[b]));

    let mut bins = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let lo = b * n / n_bins;
        let hi = (b + 1) * n / n_bins;
        let count = hi - lo;
        if count == 0 {
            return Err(Error::EmptyBin(b));
        }
        let idx = &order[lo..hi];
        let z_center = idx.iter().map(|&i| zs[i]).sum::<f64>() / count as f64;
        let mobility = idx.iter().map(|&i| mob[i]).sum::<f64>() / count as f64;
        let mean_drift = if idx.iter().all(|&i| drifts[i].is_some()) {
            Some(idx.iter().map(|&i| drifts[i].unwrap()).sum::<f64>() / count as f64)
        } else {
            None
        };
        bins.push(EffectiveBin {
            z_center,
            mass: count as f64 / n as f64,
            mobility,
            count,
            mean_drift,
        });
    }
    for w in bins.windows(2) {
        if w[1].z_center - w[0].z_center <= 1e-12 {
            return Err(Error::DegenerateFamily(
                "coincident bin centers: the CV is (nearly) constant on part of the data".into(),
            ));
        }
    }

    // Symmetrized tridiagonal generator: conductance across face (b,b+1)
    // kappa = (1/beta) * mean mobility * mean mass / dz^2, node mass Q_b.
    let nb = n_bins;
    let beta = thermo.beta;
    let mut kappa = vec![0.0f64; nb - 1];
    for b in 0..nb - 1 {
        let dz = bins[b + 1].z_center - bins[b].z_center;
        let a_face = 0.5 * (bins[b].mobility + bins[b + 1].mobility);
        let m_face = 0.5 * (bins[b].mass + bins[b + 1].mass);
        kappa[b] = a_face * m_face / (beta * dz * dz);
    }
    let mut t = DMatrix::<f64>::zeros(nb, nb);
    for b in 0..nb {
        let mut diag = 0.0;
        if b > 0 {
            diag += kappa[b - 1] / bins[b].mass;
            t[(b, b - 1)] = -kappa[b - 1] / (bins[b].mass * bins[b - 1].mass).sqrt();
        }
        if b + 1 < nb {
            diag += kappa[b] / bins[b].mass;
            t[(b, b + 1)] = -kappa[b] / (bins[b].mass * bins[b + 1].mass).sqrt();
        }
        t[(b, b)] = diag;
    }
    let (vals, _) = dense_symmetric_eigen(t);
    Ok(Effective1d {
        lambda1: vals[1],
        bins,
    })
}

/// Empirical mean and total variance of the lagged endpoints `y`,
/// conditioned on the encoder value `z = enc(x)`.
#[derive(Debug, Clone)]
pub struct BinMoments {
    /// Midpoint of the (equal-width) bin in `z`.
    pub z_center: f64,
    pub mean_y: Point2,
    /// Total variance `E|y - mean_y|^2` within the bin.
    pub var_y: f64,
    pub count: usize,
}

/// Bin pairs by `enc(x)` into `n_bins` equal-width bins over the
/// observed range; empty bins are skipped. Returns the populated bins in
/// ascending `z` order.
pub fn conditional_moments(
    pairs: &[(Point2, Point2)],
    enc: &MlpModel,
    n_bins: usize,
) -> Result<Vec<BinMoments>> {
    if n_bins == 0 {
        return Err(Error::TooFewBins { need: 1, got: 0 });
    }
    if pairs.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let zs: Vec<f64> = pairs.iter().map(|(x, _)| enc.value(*x)).collect();
    let zmin = zs.iter().cloned().fold(f64::INFINITY, f64::min);
    let zmax = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((zmax - zmin) / n_bins as f64).max(f64::MIN_POSITIVE);
    let bin_of = |z: f64| (((z - zmin) / width) as usize).min(n_bins - 1);

    let mut sums: Vec<([f64; 2], usize)> = vec![([0.0, 0.0], 0); n_bins];
    for ((_, y), &z) in pairs.iter().zip(&zs) {
        let b = bin_of(z);
        sums[b].0[0] += y[0];
        sums[b].0[1] += y[1];
        sums[b].1 += 1;
    }
    let mut means: Vec<Point2> = sums
        .iter()
        .map(|(s, c)| {
            if *c > 0 {
                [s[0] / *c as f64, s[1] / *c as f64]
            } else {
                [0.0, 0.0]
            }
        })
        .collect();
    let mut vars = vec![0.0f64; n_bins];
    for ((_, y), &z) in pairs.iter().zip(&zs) {
        let b = bin_of(z);
        let d = [y[0] - means[b][0], y[1] - means[b][1]];
        vars[b] += d[0] * d[0] + d[1] * d[1];
    }
    let mut out = Vec::new();
    for b in 0..n_bins {
        let count = sums[b].1;
        if count == 0 {
            continue;
        }
        out.push(BinMoments {
            z_center: zmin + (b as f64 + 0.5) * width,
            mean_y: std::mem::take(&mut means[b]),
            var_y: vars[b] / count as f64,
            count,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::MlpSpec;
    use crate::sampler::{simulate, subsample};

    #[test]
    fn coordinate_cv_on_ou_recovers_unit_rate() {
        // x1 is the exact slow variable of the isotropic OU process: the
        // effective dynamics is a 1-D OU process with lambda_1 = 1.
        let th = Thermo::new(1.0);
        let traj = simulate(Potential::QuadraticOu, th, [0.0, 0.0], 0.002, 400_000, 11).unwrap();
        let data = subsample(&traj, 4);
        let eff = effective_1d(&data.points, &CoordinateCv(0), &Potential::QuadraticOu, th, 64)
            .unwrap();
        assert!(
            (eff.lambda1 - 1.0).abs() <= 0.05,
            "lambda1 = {}",
            eff.lambda1
        );
        // The drift diagnostic is available for coordinate CVs.
        assert!(eff.bins.iter().all(|b| b.mean_drift.is_some()));
        // Masses are equal-count by construction.
        let total: f64 = eff.bins.iter().map(|b| b.mass).sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let pts = vec![[0.0, 0.0]; 100];
        let r = effective_1d(
            &pts,
            &CoordinateCv(0),
            &Potential::QuadraticOu,
            Thermo::new(1.0),
            10,
        );
        assert!(matches!(r, Err(Error::DegenerateFamily(_))));
        let r2 = effective_1d(
            &pts,
            &CoordinateCv(0),
            &Potential::QuadraticOu,
            Thermo::new(1.0),
            2,
        );
        assert!(matches!(r2, Err(Error::TooFewBins { .. })));
    }

    #[test]
    fn moments_with_zero_lag_reproduce_bin_means_of_x() {
        let enc = MlpModel::init(MlpSpec::new(vec![2, 6, 1]).unwrap(), 4);
        let pts: Vec<Point2> = (0..500)
            .map(|i| {
                let t = i as f64 * 0.02;
                [t.sin(), (1.3 * t).cos()]
            })
            .collect();
        let pairs: Vec<(Point2, Point2)> = pts.iter().map(|&p| (p, p)).collect();
        let moments = conditional_moments(&pairs, &enc, 8).unwrap();
        // With y == x, each bin mean must equal the bin mean of x, which
        // we recompute independently.
        let zs: Vec<f64> = pts.iter().map(|&p| enc.value(p)).collect();
        let zmin = zs.iter().cloned().fold(f64::INFINITY, f64::min);
        let zmax = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (zmax - zmin) / 8.0;
        for m in &moments {
            let b = ((m.z_center - zmin) / width) as usize;
            let members: Vec<Point2> = pts
                .iter()
                .zip(&zs)
                .filter(|(_, &z)| (((z - zmin) / width) as usize).min(7) == b.min(7))
                .map(|(p, _)| *p)
                .collect();
            assert_eq!(members.len(), m.count);
            let mx: f64 = members.iter().map(|p| p[0]).sum::<f64>() / m.count as f64;
            assert!((mx - m.mean_y[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_bin_gives_global_mean() {
        let enc = MlpModel::init(MlpSpec::new(vec![2, 4, 1]).unwrap(), 9);
        let pairs: Vec<(Point2, Point2)> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                ([t.sin(), t.cos()], [t.cos(), 2.0 * t.sin()])
            })
            .collect();
        let m = conditional_moments(&pairs, &enc, 1).unwrap();
        assert_eq!(m.len(), 1);
        let gx: f64 = pairs.iter().map(|(_, y)| y[0]).sum::<f64>() / 100.0;
        assert!((m[0].mean_y[0] - gx).abs() <= 1e-12);
    }
}
