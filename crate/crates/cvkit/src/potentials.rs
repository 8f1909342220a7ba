//! Built-in potential-energy landscapes on the plane.
//!
//! Each potential is a closed-form C^2 map with exact gradient; the
//! Boltzmann weight `exp(-beta * V)` built from it is the stationary
//! density targeted by every sampler and oracle in this crate.

use serde::{Deserialize, Serialize};

use crate::Point2;

/// Potential-energy landscape. The set is closed: oracle domains and test
/// fixtures are tabulated per kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// Double well `(x1^2-1)^2 + (x1^2+x2-1)^2 / epsilon`: two minima at
    /// `(+-1, 0)` joined by a stiff curved channel along `x2 = 1 - x1^2`.
    Example1 { epsilon: f64 },
    /// Asymmetric two-well landscape with a sigmoid barrier ridge around
    /// `|x1| < 1` and Gaussian wells near `(+-2, 0)`.
    Example2,
    /// Isotropic quadratic well `|x|^2 / 2` (Ornstein-Uhlenbeck drift).
    QuadraticOu,
}

/// Inverse temperature `beta = 1/(k_B T)` carried alongside a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thermo {
    pub beta: f64,
}

impl Thermo {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        Thermo { beta }
    }
}

impl Potential {
    pub fn example1() -> Self {
        Potential::Example1 { epsilon: 0.5 }
    }

    /// Potential energy at `x`.
    pub fn value(&self, x: Point2) -> f64 {
        let [x1, x2] = x;
        match *self {
            Potential::Example1 { epsilon } => {
                let a = x1 * x1 - 1.0;
                let b = x1 * x1 + x2 - 1.0;
                a * a + b * b / epsilon
            }
            Potential::Example2 => {
                let g1 = (-4.0 * (x1 - 2.0) * (x1 - 2.0) - 0.4 * x2 * x2).exp();
                let g2 = (-4.0 * (x1 + 2.0) * (x1 + 2.0) - 0.4 * x2 * x2).exp();
                (1.5 * x2 * x2).exp() / (1.0 + (5.0 * (x1 * x1 - 1.0)).exp()) - 4.0 * g1
                    - 5.0 * g2
                    + 0.2 * (x1.powi(4) + x2.powi(4))
                    + 0.5 * (-2.0 * x1 * x1).exp()
            }
            Potential::QuadraticOu => 0.5 * (x1 * x1 + x2 * x2),
        }
    }

    /// Exact gradient of the potential.
    pub fn gradient(&self, x: Point2) -> Point2 {
        let [x1, x2] = x;
        match *self {
            Potential::Example1 { epsilon } => {
                let b = x1 * x1 + x2 - 1.0;
                [
                    4.0 * x1 * (x1 * x1 - 1.0) + 4.0 * x1 * b / epsilon,
                    2.0 * b / epsilon,
                ]
            }
            Potential::Example2 => {
                let num = (1.5 * x2 * x2).exp();
                let e5 = (5.0 * (x1 * x1 - 1.0)).exp();
                let den = 1.0 + e5;
                let g1 = (-4.0 * (x1 - 2.0) * (x1 - 2.0) - 0.4 * x2 * x2).exp();
                let g2 = (-4.0 * (x1 + 2.0) * (x1 + 2.0) - 0.4 * x2 * x2).exp();
                [
                    -10.0 * x1 * num * e5 / (den * den)
                        + 32.0 * (x1 - 2.0) * g1
                        + 40.0 * (x1 + 2.0) * g2
                        + 0.8 * x1.powi(3)
                        - 2.0 * x1 * (-2.0 * x1 * x1).exp(),
                    3.0 * x2 * num / den + 3.2 * x2 * g1 + 4.0 * x2 * g2 + 0.8 * x2.powi(3),
                ]
            }
            Potential::QuadraticOu => [x1, x2],
        }
    }

    /// Hessian as `[[d11, d12], [d12, d22]]`.
    ///
    /// Example1 and QuadraticOu are closed forms; Example2 falls back to
    /// central differences of the exact gradient (h = 1e-5), which is
    /// accurate well beyond the quadrature-level checks that consume it.
    pub fn hessian(&self, x: Point2) -> [[f64; 2]; 2] {
        let [x1, x2] = x;
        match *self {
            Potential::Example1 { epsilon } => {
                let b = x1 * x1 + x2 - 1.0;
                let d11 = 12.0 * x1 * x1 - 4.0 + (4.0 * b + 8.0 * x1 * x1) / epsilon;
                let d12 = 4.0 * x1 / epsilon;
                let d22 = 2.0 / epsilon;
                [[d11, d12], [d12, d22]]
            }
            Potential::Example2 => {
                let h = 1e-5;
                let gxp = self.gradient([x1 + h, x2]);
                let gxm = self.gradient([x1 - h, x2]);
                let gyp = self.gradient([x1, x2 + h]);
                let gym = self.gradient([x1, x2 - h]);
                let d11 = (gxp[0] - gxm[0]) / (2.0 * h);
                let d22 = (gyp[1] - gym[1]) / (2.0 * h);
                // Symmetrize the two mixed-partial estimates.
                let d12 = 0.5 * ((gyp[0] - gym[0]) / (2.0 * h) + (gxp[1] - gxm[1]) / (2.0 * h));
                [[d11, d12], [d12, d22]]
            }
            Potential::QuadraticOu => [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Hessian applied as a bilinear form, `v^T (Hess V) v`.
    pub fn hessian_form(&self, x: Point2, v: Point2) -> f64 {
        let h = self.hessian(x);
        v[0] * (h[0][0] * v[0] + h[0][1] * v[1]) + v[1] * (h[1][0] * v[0] + h[1][1] * v[1])
    }

    /// Default starting point for trajectory simulation (a well minimum).
    pub fn default_start(&self) -> Point2 {
        match self {
            Potential::Example1 { .. } => [1.0, 0.0],
            Potential::Example2 => [2.0, 0.0],
            Potential::QuadraticOu => [0.0, 0.0],
        }
    }

    /// Rectangular domain on which the Boltzmann weight is essentially
    /// supported; used as the default grid/bin extent for oracles.
    pub fn default_domain(&self) -> [[f64; 2]; 2] {
        match self {
            Potential::Example1 { .. } => [[-2.0, 2.0], [-1.5, 2.5]],
            Potential::Example2 => [[-3.5, 3.5], [-2.5, 2.5]],
            Potential::QuadraticOu => [[-4.0, 4.0], [-4.0, 4.0]],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Example1 { .. } => "example1",
            Potential::Example2 => "example2",
            Potential::QuadraticOu => "quadratic_ou",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn builtin_kinds() -> Vec<Potential> {
        vec![
            Potential::example1(),
            Potential::Example2,
            Potential::QuadraticOu,
        ]
    }

    #[test]
    fn example1_well_and_saddle_values() {
        let p = Potential::example1();
        assert_eq!(p.value([1.0, 0.0]), 0.0);
        assert_eq!(p.value([-1.0, 0.0]), 0.0);
        assert_eq!(p.value([0.0, 1.0]), 1.0);
        assert_eq!(p.gradient([1.0, 0.0]), [0.0, 0.0]);
        assert_eq!(p.gradient([0.0, 1.0]), [0.0, 0.0]);
    }

    #[test]
    fn example2_origin_value() {
        // 1/(1+e^-5) - 9 e^-16 + 0.5, evaluated independently.
        let expected = 1.0 / (1.0 + (-5.0f64).exp()) - 9.0 * (-16.0f64).exp() + 0.5;
        assert_relative_eq!(Potential::Example2.value([0.0, 0.0]), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 1.4933, epsilon = 1e-4);
    }

    #[test]
    fn quadratic_ou_gradient_is_identity_map() {
        let p = Potential::QuadraticOu;
        assert_eq!(p.gradient([0.3, -1.7]), [0.3, -1.7]);
        assert_eq!(p.hessian([5.0, -2.0]), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn example1_hessian_matches_fd_of_gradient() {
        let p = Potential::example1();
        let h = 1e-5;
        for &x in &[[1.0, 0.0], [0.3, -0.4], [-1.2, 1.1]] {
            let hess = p.hessian(x);
            let gxp = p.gradient([x[0] + h, x[1]]);
            let gxm = p.gradient([x[0] - h, x[1]]);
            let gyp = p.gradient([x[0], x[1] + h]);
            let gym = p.gradient([x[0], x[1] - h]);
            assert_relative_eq!(hess[0][0], (gxp[0] - gxm[0]) / (2.0 * h), epsilon = 1e-5);
            assert_relative_eq!(hess[0][1], (gyp[0] - gym[0]) / (2.0 * h), epsilon = 1e-5);
            assert_relative_eq!(hess[1][1], (gyp[1] - gym[1]) / (2.0 * h), epsilon = 1e-5);
        }
        // At the well (1,0): d11 = 8 + 16/... with epsilon=0.5 this is 24.
        let hw = p.hessian([1.0, 0.0]);
        assert_relative_eq!(hw[0][0], 24.0, epsilon = 1e-12);
        assert_relative_eq!(hw[0][1], 8.0, epsilon = 1e-12);
        assert_relative_eq!(hw[1][1], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn gradients_match_central_differences_of_value() {
        // Deterministic sweep of 100 points in [-3,3]^2 per kind.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in builtin_kinds() {
            for _ in 0..100 {
                let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let g = p.gradient(x);
                let h = 1e-5;
                let fd = [
                    (p.value([x[0] + h, x[1]]) - p.value([x[0] - h, x[1]])) / (2.0 * h),
                    (p.value([x[0], x[1] + h]) - p.value([x[0], x[1] - h])) / (2.0 * h),
                ];
                for i in 0..2 {
                    assert!(
                        (g[i] - fd[i]).abs() <= 1e-6 * (1.0 + g[i].abs()),
                        "{:?} at {:?}: component {i} analytic {} vs fd {}",
                        p,
                        x,
                        g[i],
                        fd[i]
                    );
                }
            }
        }
    }

    #[test]
    fn example2_is_symmetric_in_x2() {
        let p = Potential::Example2;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(p.value(x), p.value([x[0], -x[1]]));
        }
    }

    #[test]
    fn hessians_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for p in builtin_kinds() {
            for _ in 0..20 {
                let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let h = p.hessian(x);
                assert!((h[0][1] - h[1][0]).abs() <= 1e-12 * (1.0 + h[0][1].abs()));
            }
        }
    }
}
