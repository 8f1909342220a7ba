//! Principal component analysis with its closed-form reconstruction
//! residual, the linear baseline every autoencoder is compared against.

use nalgebra::DMatrix;

use super::linalg::dense_symmetric_eigen;
use crate::{Error, Point2, Result};

#[derive(Debug, Clone)]
pub struct PcaResult {
    pub mean: Point2,
    /// Unit principal directions, leading first.
    pub components: Vec<Point2>,
    /// Covariance eigenvalues (1/N normalization), descending.
    pub eigenvalues: Vec<f64>,
    /// `sum_i |x_c^(i) - U_k U_k^T x_c^(i)|^2` over the centered data.
    pub residual: f64,
    pub k: usize,
}

/// Fit the top-`k` principal subspace. Data are centered internally.
pub fn pca(points: &[Point2], k: usize) -> Result<PcaResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    assert!((1..=2).contains(&k), "k must be 1 or 2 for planar data");
    let nf = n as f64;
    let mut mean = [0.0f64; 2];
    for p in points {
        mean[0] += p[0];
        mean[1] += p[1];
    }
    mean[0] /= nf;
    mean[1] /= nf;
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = [p[0] - mean[0], p[1] - mean[1]];
        cxx += d[0] * d[0];
        cxy += d[0] * d[1];
        cyy += d[1] * d[1];
    }
    cxx /= nf;
    cxy /= nf;
    cyy /= nf;
    let (vals, vecs) = dense_symmetric_eigen(DMatrix::from_row_slice(2, 2, &[cxx, cxy, cxy, cyy]));
    // Descending order, deterministic sign (largest magnitude entry positive).
    let order = [1usize, 0usize];
    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(2);
    for &i in &order {
        eigenvalues.push(vals[i]);
    }
    for &i in order.iter().take(k) {
        let mut v = [vecs[i][0], vecs[i][1]];
        let dominant = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
        if dominant < 0.0 {
            v = [-v[0], -v[1]];
        }
        components.push(v);
    }
    // Residual as the direct sum of squared rejections.
    let mut residual = 0.0;
    for p in points {
        let d = [p[0] - mean[0], p[1] - mean[1]];
        let mut proj = [0.0f64; 2];
        for c in &components {
            let a = d[0] * c[0] + d[1] * c[1];
            proj[0] += a * c[0];
            proj[1] += a * c[1];
        }
        let r = [d[0] - proj[0], d[1] - proj[1]];
        residual += r[0] * r[0] + r[1] * r[1];
    }
    Ok(PcaResult {
        mean,
        components,
        eigenvalues,
        residual,
        k,
    })
}
