//! Rectangular grids carrying Boltzmann quadrature weights.

use crate::potentials::{Potential, Thermo};
use crate::Point2;

/// Log-weight exponents `beta (V - vmin)` are capped here: the clipped
/// mass (under exp(-40) ~ 4e-18 of the peak) is far below every
/// tolerance in play, while uncapped walls would underflow weights to
/// zero and overflow the divergence-form conductances.
const LOG_WEIGHT_CAP: f64 = 40.0;

/// Uniform rectangular grid over `[x1min,x1max] x [x2min,x2max]` with
/// `n1 x n2` nodes (boundaries included). Node `(i, j)` has flat index
/// `i * n2 + j`. Each node carries the normalized Boltzmann weight
/// `exp(-beta V(node)) / Z`, the discrete stand-in for the invariant
/// measure.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub bounds: [[f64; 2]; 2],
    pub n1: usize,
    pub n2: usize,
    pub potential: Potential,
    pub thermo: Thermo,
    pub weights: Vec<f64>,
    /// Minimum of V over the nodes; weights are exp(-beta (V - vmin)) / z.
    vmin: f64,
    z: f64,
}

/// Values attached to every node of a grid, in flat index order.
pub type GridFunction = Vec<f64>;

impl Grid2D {
    pub fn new(bounds: [[f64; 2]; 2], n1: usize, n2: usize, potential: Potential, thermo: Thermo) -> Self {
        assert!(n1 >= 3 && n2 >= 3, "grids need at least 3 nodes per axis");
        assert!(bounds[0][0] < bounds[0][1] && bounds[1][0] < bounds[1][1]);
        let mut v = Vec::with_capacity(n1 * n2);
        let mut vmin = f64::INFINITY;
        let mut g = Grid2D {
            bounds,
            n1,
            n2,
            potential,
            thermo,
            weights: Vec::new(),
            vmin: 0.0,
            z: 1.0,
        };
        for i in 0..n1 {
            for j in 0..n2 {
                let val = potential.value(g.node(i, j));
                vmin = vmin.min(val);
                v.push(val);
            }
        }
        g.vmin = vmin;
        let mut z = 0.0;
        let weights: Vec<f64> = v
            .iter()
            .map(|&val| {
                let w = (-(thermo.beta * (val - vmin)).min(LOG_WEIGHT_CAP)).exp();
                z += w;
                w
            })
            .collect();
        g.weights = weights.iter().map(|w| w / z).collect();
        g.z = z;
        g
    }

    /// Capped log-weight exponent `min(beta (V(x) - vmin), cap)`, shared
    /// by node weights, face weights and the operator stencil.
    pub fn log_weight_exponent(&self, x: Point2) -> f64 {
        (self.thermo.beta * (self.potential.value(x) - self.vmin)).min(LOG_WEIGHT_CAP)
    }

    /// Grid over the potential's default domain.
    pub fn default_for(potential: Potential, thermo: Thermo, n1: usize, n2: usize) -> Self {
        Grid2D::new(potential.default_domain(), n1, n2, potential, thermo)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h1(&self) -> f64 {
        (self.bounds[0][1] - self.bounds[0][0]) / (self.n1 - 1) as f64
    }

    pub fn h2(&self) -> f64 {
        (self.bounds[1][1] - self.bounds[1][0]) / (self.n2 - 1) as f64
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    pub fn node(&self, i: usize, j: usize) -> Point2 {
        [
            self.bounds[0][0] + i as f64 * (self.bounds[0][1] - self.bounds[0][0]) / (self.n1 - 1) as f64,
            self.bounds[1][0] + j as f64 * (self.bounds[1][1] - self.bounds[1][0]) / (self.n2 - 1) as f64,
        ]
    }

    /// Normalized weight of a face through `x`, on the same scale as the
    /// node weights (shared `vmin`, cap and normalizer).
    pub fn face_weight(&self, x: Point2) -> f64 {
        (-self.log_weight_exponent(x)).exp() / self.z
    }

    pub fn sample(&self, f: impl Fn(Point2) -> f64) -> GridFunction {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                out.push(f(self.node(i, j)));
            }
        }
        out
    }

    /// Weighted mean `sum_nodes w f`.
    pub fn weighted_mean(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len());
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Weighted inner product `sum_nodes w f g`.
    pub fn weighted_dot(&self, f: &[f64], g: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len());
        assert_eq!(g.len(), self.len());
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// Index of the node nearest to `x` (ties resolved toward the
    /// smaller flat index).
    pub fn nearest_node(&self, x: Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let p = self.node(i, j);
                let d = (p[0] - x[0]) * (p[0] - x[0]) + (p[1] - x[1]) * (p[1] - x[1]);
                if d < best_d {
                    best_d = d;
                    best = self.idx(i, j);
                }
            }
        }
        best
    }

    /// Bilinear interpolation of a grid function; points outside the
    /// domain are clamped to it.
    pub fn interp(&self, values: &[f64], x: Point2) -> f64 {
        assert_eq!(values.len(), self.len());
        let (i, j, t, u) = self.cell_of(x);
        let v00 = values[self.idx(i, j)];
        let v10 = values[self.idx(i + 1, j)];
        let v01 = values[self.idx(i, j + 1)];
        let v11 = values[self.idx(i + 1, j + 1)];
        v00 * (1.0 - t) * (1.0 - u) + v10 * t * (1.0 - u) + v01 * (1.0 - t) * u + v11 * t * u
    }

    fn cell_of(&self, x: Point2) -> (usize, usize, f64, f64) {
        let cx = x[0].clamp(self.bounds[0][0], self.bounds[0][1]);
        let cy = x[1].clamp(self.bounds[1][0], self.bounds[1][1]);
        let fx = (cx - self.bounds[0][0]) / self.h1();
        let fy = (cy - self.bounds[1][0]) / self.h2();
        let i = (fx.floor() as usize).min(self.n1 - 2);
        let j = (fy.floor() as usize).min(self.n2 - 2);
        (i, j, fx - i as f64, fy - j as f64)
    }

    /// Per-node gradient of a grid function by central differences
    /// (one-sided at the boundary), returned as two grid functions.
    pub fn node_gradients(&self, values: &[f64]) -> (GridFunction, GridFunction) {
        assert_eq!(values.len(), self.len());
        let (h1, h2) = (self.h1(), self.h2());
        let mut gx = vec![0.0; self.len()];
        let mut gy = vec![0.0; self.len()];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let id = self.idx(i, j);
                gx[id] = if i == 0 {
                    (values[self.idx(1, j)] - values[self.idx(0, j)]) / h1
                } else if i == self.n1 - 1 {
                    (values[id] - values[self.idx(i - 1, j)]) / h1
                } else {
                    (values[self.idx(i + 1, j)] - values[self.idx(i - 1, j)]) / (2.0 * h1)
                };
                gy[id] = if j == 0 {
                    (values[self.idx(i, 1)] - values[self.idx(i, 0)]) / h2
                } else if j == self.n2 - 1 {
                    (values[id] - values[self.idx(i, j - 1)]) / h2
                } else {
                    (values[self.idx(i, j + 1)] - values[self.idx(i, j - 1)]) / (2.0 * h2)
                };
            }
        }
        (gx, gy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou_grid() -> Grid2D {
        Grid2D::new(
            [[-1.0, 1.0], [-1.0, 1.0]],
            5,
            5,
            Potential::QuadraticOu,
            Thermo::new(1.0),
        )
    }

    #[test]
    fn weights_are_normalized_and_positive() {
        let g = ou_grid();
        assert!(g.weights.iter().all(|&w| w > 0.0));
        let total: f64 = g.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn node_layout_and_spacing() {
        let g = ou_grid();
        assert_eq!(g.h1(), 0.5);
        assert_eq!(g.node(0, 0), [-1.0, -1.0]);
        assert_eq!(g.node(4, 2), [1.0, 0.0]);
        assert_eq!(g.nearest_node([0.9, 0.1]), g.idx(4, 2));
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = ou_grid();
        let f = g.sample(|p| 2.0 * p[0] - 3.0 * p[1] + 0.25 * p[0] * p[1] + 1.0);
        for &x in &[[0.1, 0.3], [-0.7, 0.9], [0.5, -0.5]] {
            let want = 2.0 * x[0] - 3.0 * x[1] + 0.25 * x[0] * x[1] + 1.0;
            assert!((g.interp(&f, x) - want).abs() < 1e-12);
        }
        // Clamped outside the domain.
        let inside = g.interp(&f, [1.0, 0.0]);
        assert_eq!(g.interp(&f, [5.0, 0.0]), inside);
    }

    #[test]
    fn node_gradients_are_exact_for_linear_functions() {
        let g = ou_grid();
        let f = g.sample(|p| 3.0 * p[0] - 2.0 * p[1]);
        let (gx, gy) = g.node_gradients(&f);
        assert!(gx.iter().all(|&v| (v - 3.0).abs() < 1e-12));
        assert!(gy.iter().all(|&v| (v + 2.0).abs() < 1e-12));
    }
}
