//! Finite-difference discretization of the generator and its spectrum.
//!
//! The negated generator is discretized in divergence form
//! `(-L f)_i = -(1/beta) exp(beta V_i) div(exp(-beta V) grad f)_i`
//! on a rectangular grid with face-centered Boltzmann weights and
//! reflecting (zero-flux) boundaries. This keeps the constant function
//! an exact eigenvector with eigenvalue zero and makes the matrix
//! self-adjoint in the weighted inner product, so the discrete spectrum
//! obeys the same variational identities as the continuous one.

use super::grid::{Grid2D, GridFunction};
use super::linalg::{smallest_eigenpairs, Csr};
use super::{fix_sign, EigenResult, SpectrumOrder};
use crate::{Error, Point2, Result};

/// Discretized `-L` with both node-form and symmetrized matrices.
#[derive(Debug, Clone)]
pub struct FdOperator {
    pub grid: Grid2D,
    /// Node-form matrix; `apply` uses it directly.
    plain: Csr,
    /// Similarity transform `D^{1/2} M D^{-1/2}` (exactly symmetric),
    /// used by the eigensolver.
    sym: Csr,
}

/// Build the divergence-form discretization of `-L` on `grid`.
pub fn fd_generator(grid: &Grid2D) -> FdOperator {
    let (n1, n2) = (grid.n1, grid.n2);
    let beta = grid.thermo.beta;
    let (h1, h2) = (grid.h1(), grid.h2());
    // Capped log-weights, shared with the grid's node/face weights.
    let lw: Vec<f64> = {
        let mut v = Vec::with_capacity(grid.len());
        for i in 0..n1 {
            for j in 0..n2 {
                v.push(grid.log_weight_exponent(grid.node(i, j)));
            }
        }
        v
    };
    let mut plain = Vec::new();
    let mut sym = Vec::new();
    let mut add_face = |a: usize, b: usize, lw_face: f64, h: f64| {
        let inv = 1.0 / (beta * h * h);
        let c_a = (lw[a] - lw_face).exp() * inv;
        let c_b = (lw[b] - lw_face).exp() * inv;
        let c_s = (0.5 * (lw[a] + lw[b]) - lw_face).exp() * inv;
        plain.push((a, b, -c_a));
        plain.push((b, a, -c_b));
        plain.push((a, a, c_a));
        plain.push((b, b, c_b));
        sym.push((a, b, -c_s));
        sym.push((b, a, -c_s));
        sym.push((a, a, c_a));
        sym.push((b, b, c_b));
    };
    for i in 0..n1 {
        for j in 0..n2 {
            let x = grid.node(i, j);
            if i + 1 < n1 {
                let mid = [x[0] + 0.5 * h1, x[1]];
                add_face(
                    grid.idx(i, j),
                    grid.idx(i + 1, j),
                    grid.log_weight_exponent(mid),
                    h1,
                );
            }
            if j + 1 < n2 {
                let mid = [x[0], x[1] + 0.5 * h2];
                add_face(
                    grid.idx(i, j),
                    grid.idx(i, j + 1),
                    grid.log_weight_exponent(mid),
                    h2,
                );
            }
        }
    }
    FdOperator {
        grid: grid.clone(),
        plain: Csr::from_triplets(n1 * n2, &plain),
        sym: Csr::from_triplets(n1 * n2, &sym),
    }
}

impl FdOperator {
    /// Apply `-L` to a grid function.
    pub fn apply(&self, f: &[f64]) -> GridFunction {
        self.plain.apply(f)
    }

    /// Weighted quadratic form `<(-L) f, f>_w`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let mf = self.apply(f);
        self.grid.weighted_dot(&mf, f)
    }

    /// Entries of the node-form matrix, for symmetry diagnostics.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.plain.entries()
    }

    /// Smallest `m` eigenpairs, ascending, eigenfunctions orthonormal in
    /// the grid's weighted inner product. The constant eigenpair is
    /// returned exactly; the rest come from shift-inverted subspace
    /// iteration on the symmetrized matrix with the constant mode
    /// deflated.
    pub fn leading_eigs(&self, m: usize) -> Result<EigenResult> {
        assert!((1..=12).contains(&m), "m must be in 1..=12");
        let n = self.grid.len();
        let w = &self.grid.weights;
        let mut eigenvalues = Vec::with_capacity(m);
        let mut functions: Vec<Vec<f64>> = Vec::with_capacity(m);
        // Constant mode: weights are normalized, so f = 1 has unit norm.
        let ones = vec![1.0; n];
        eigenvalues.push(self.quadratic_form(&ones));
        functions.push(ones);
        if m > 1 {
            let sqrt_w: Vec<f64> = w.iter().map(|&wi| wi.sqrt()).collect();
            let known = vec![sqrt_w.clone()];
            // Residual target 1e-5 relative: eigenvalue errors scale with
            // the residual squared, which lands around 1e-10.
            let (vals, vecs) =
                smallest_eigenpairs(&self.sym, m - 1, &known, 0.1, 1e-5, 400)?;
            let anchor = self.grid.nearest_node([1.0, 0.0]);
            for (lambda, v) in vals.into_iter().zip(vecs) {
                let mut f: Vec<f64> = v.iter().zip(&sqrt_w).map(|(vi, si)| vi / si).collect();
                fix_sign(&mut f, anchor);
                eigenvalues.push(lambda);
                functions.push(f);
            }
        }
        Ok(EigenResult {
            eigenvalues,
            functions,
            weights: w.clone(),
            order: SpectrumOrder::Ascending,
        })
    }

    /// Dirichlet form `sum_faces w_face |grad f|^2` (face-centered
    /// weights, same stencil as the matrix, so this equals
    /// `beta <(-L) f, f>_w` up to round-off).
    pub fn dirichlet_form(&self, f: &[f64]) -> f64 {
        let g = &self.grid;
        let (h1, h2) = (g.h1(), g.h2());
        let mut total = 0.0;
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                let x = g.node(i, j);
                if i + 1 < g.n1 {
                    let wf = g.face_weight([x[0] + 0.5 * h1, x[1]]);
                    let d = (f[g.idx(i + 1, j)] - f[g.idx(i, j)]) / h1;
                    total += wf * d * d;
                }
                if j + 1 < g.n2 {
                    let wf = g.face_weight([x[0], x[1] + 0.5 * h2]);
                    let d = (f[g.idx(i, j + 1)] - f[g.idx(i, j)]) / h2;
                    total += wf * d * d;
                }
            }
        }
        total
    }

    /// Energy `(1/beta) E_mu |grad f|^2` by face quadrature.
    pub fn energy(&self, f: &[f64]) -> f64 {
        self.dirichlet_form(f) / self.grid.thermo.beta
    }
}

/// Closed-form scalar field with exact first and second derivatives,
/// used by identity checks that must not involve grid differentiation.
pub trait SmoothField {
    fn value(&self, x: Point2) -> f64;
    fn gradient(&self, x: Point2) -> Point2;
    fn hessian(&self, x: Point2) -> [[f64; 2]; 2];
}

/// Quadrature check of the second-order integration-by-parts identity:
/// `int |L f|^2 dmu  =  (1/beta) int [HessV(grad f, grad f)
///                      + (1/beta) |hess f|_F^2] dmu`.
/// Both sides are evaluated with exact derivatives of `f` on the grid's
/// weighted nodes; returns `(lhs, rhs, rel_err)`.
pub fn bochner_check(grid: &Grid2D, f: &impl SmoothField) -> (f64, f64, f64) {
    let beta = grid.thermo.beta;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let x = grid.node(i, j);
            let w = grid.weights[grid.idx(i, j)];
            let gf = f.gradient(x);
            let hf = f.hessian(x);
            let gv = grid.potential.gradient(x);
            let lf = -(gv[0] * gf[0] + gv[1] * gf[1]) + (hf[0][0] + hf[1][1]) / beta;
            lhs += w * lf * lf;
            let hess_v = grid.potential.hessian_form(x, gf);
            let frob = hf[0][0] * hf[0][0]
                + hf[0][1] * hf[0][1]
                + hf[1][0] * hf[1][0]
                + hf[1][1] * hf[1][1];
            rhs += w * (hess_v + frob / beta);
        }
    }
    rhs /= beta;
    let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
    (lhs, rhs, rel)
}

/// The two terms of the slowness objective for a family of candidate
/// collective variables.
#[derive(Debug, Clone, Copy)]
pub struct SlownessValue {
    /// `sum_i w_i int |L xi_i|^2 dmu`.
    pub term1: f64,
    /// `sum_i w_i int |grad xi_i|^2 dmu`.
    pub term2: f64,
    pub total: f64,
}

/// Evaluate the slowness objective on `family` after centering and
/// Gram-Schmidt orthonormalization in the grid's weighted inner product.
pub fn slowness_objective(
    family: &[GridFunction],
    op: &FdOperator,
    omegas: &[f64],
) -> Result<SlownessValue> {
    assert_eq!(family.len(), omegas.len());
    let grid = &op.grid;
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(family.len());
    for xi in family {
        assert_eq!(xi.len(), grid.len());
        let mean = grid.weighted_mean(xi);
        let mut v: Vec<f64> = xi.iter().map(|x| x - mean).collect();
        let scale = grid.weighted_dot(xi, xi).sqrt();
        for b in &ortho {
            let c = grid.weighted_dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let norm = grid.weighted_dot(&v, &v).sqrt();
        if norm <= 1e-12 * scale.max(1e-300) {
            return Err(Error::DegenerateFamily(
                "input family is constant or linearly dependent".into(),
            ));
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        ortho.push(v);
    }
    let mut term1 = 0.0;
    let mut term2 = 0.0;
    for (xi, &w) in ortho.iter().zip(omegas) {
        let mxi = op.apply(xi);
        term1 += w * grid.weighted_dot(&mxi, &mxi);
        term2 += w * op.dirichlet_form(xi);
    }
    Ok(SlownessValue {
        term1,
        term2,
        total: term1 + term2,
    })
}

/// Resolution heuristic: compare the first nontrivial eigenvalue on the
/// given grid against a grid with doubled spacing. A relative gap above
/// 20% flags the discretization as unconverged (second-order stencil, so
/// the coarse-vs-fine gap overestimates the remaining error).
pub fn check_grid_resolution(grid: &Grid2D) -> Result<f64> {
    let fine = fd_generator(grid).leading_eigs(2)?;
    let coarse_grid = Grid2D::new(
        grid.bounds,
        grid.n1.div_ceil(2),
        grid.n2.div_ceil(2),
        grid.potential,
        grid.thermo,
    );
    let coarse = fd_generator(&coarse_grid).leading_eigs(2)?;
    let lf = fine.eigenvalues[1];
    let lc = coarse.eigenvalues[1];
    let gap = (lf - lc).abs() / lf.abs().max(1e-300);
    if gap > 0.2 {
        return Err(Error::GridTooCoarse(format!(
            "lambda_1 moves by {:.1}% between spacings h and 2h",
            100.0 * gap
        )));
    }
    Ok(lf)
}

#[doc(hidden)]
impl FdOperator {
    /// Entries of the symmetrized matrix (diagnostics only).
    pub fn sym_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.sym.entries()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Potential, Thermo};
    use approx::assert_relative_eq;

    fn small_ou_grid() -> Grid2D {
        Grid2D::new(
            [[-4.0, 4.0], [-4.0, 4.0]],
            61,
            61,
            Potential::QuadraticOu,
            Thermo::new(1.0),
        )
    }

    #[test]
    fn constant_function_is_in_the_kernel() {
        let op = fd_generator(&small_ou_grid());
        let ones = vec![1.0; op.grid.len()];
        let out = op.apply(&ones);
        assert!(out.iter().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn matrix_is_weighted_symmetric() {
        let g = Grid2D::new(
            [[-2.0, 2.0], [-1.5, 2.5]],
            21,
            21,
            Potential::example1(),
            Thermo::new(4.0),
        );
        let op = fd_generator(&g);
        let w = &g.weights;
        // Collect the full entry map once for transpose lookups.
        let mut entries = std::collections::HashMap::new();
        for (r, c, v) in op.entries() {
            entries.insert((r, c), v);
        }
        for (&(r, c), &v) in &entries {
            let vt = entries[&(c, r)];
            assert!(
                (w[r] * v - w[c] * vt).abs() <= 1e-12,
                "asymmetry at ({r},{c})"
            );
        }
    }

    #[test]
    fn ou_spectrum_on_coarse_grid() {
        // 61^2 is already enough for ~1% accuracy on the OU eigenvalues.
        let op = fd_generator(&small_ou_grid());
        let eig = op.leading_eigs(4).unwrap();
        assert!(eig.eigenvalues[0].abs() < 1e-8);
        let spread = eig.functions[0].iter().fold((f64::MAX, f64::MIN), |acc, &v| {
            (acc.0.min(v), acc.1.max(v))
        });
        assert!(spread.1 - spread.0 < 1e-6);
        assert_relative_eq!(eig.eigenvalues[1], 1.0, max_relative = 0.02);
        assert_relative_eq!(eig.eigenvalues[2], 1.0, max_relative = 0.02);
        assert_relative_eq!(eig.eigenvalues[3], 2.0, max_relative = 0.03);
        assert!(eig.orthonormality_defect() < 1e-8);
        // Ordering invariants: non-negative, ascending.
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn energy_is_consistent_with_quadratic_form() {
        let op = fd_generator(&small_ou_grid());
        let f = op.grid.sample(|p| (p[0] * 0.8).sin() + 0.3 * p[1]);
        let via_form = op.quadratic_form(&f);
        let via_faces = op.energy(&f);
        assert!((via_form - via_faces).abs() <= 1e-10 * via_form.abs().max(1.0));
        // Constant functions carry no energy.
        assert_eq!(op.energy(&vec![3.0; op.grid.len()]), 0.0);
        // f = x1 on the OU grid at beta = 1: |grad f|^2 = 1, energy ~ 1.
        let fx = op.grid.sample(|p| p[0]);
        assert_relative_eq!(op.energy(&fx), 1.0, max_relative = 1e-3);
    }

    #[test]
    fn rayleigh_quotient_reproduces_eigenvalues() {
        let op = fd_generator(&small_ou_grid());
        let eig = op.leading_eigs(3).unwrap();
        for i in 1..3 {
            let f = &eig.functions[i];
            let rq = op.quadratic_form(f) / op.grid.weighted_dot(f, f);
            assert!((rq - eig.eigenvalues[i]).abs() <= 1e-8 * eig.eigenvalues[i]);
            // The energy form gives the same number.
            let var = op.grid.weighted_dot(f, f)
                - op.grid.weighted_mean(f) * op.grid.weighted_mean(f);
            assert_relative_eq!(op.energy(f) / var, eig.eigenvalues[i], max_relative = 1e-6);
        }
    }

    #[test]
    fn bochner_identity_linear_on_ou() {
        // f = a . x on the OU landscape: both sides equal |a|^2 / beta.
        struct Linear([f64; 2]);
        impl SmoothField for Linear {
            fn value(&self, x: Point2) -> f64 {
                self.0[0] * x[0] + self.0[1] * x[1]
            }
            fn gradient(&self, _x: Point2) -> Point2 {
                self.0
            }
            fn hessian(&self, _x: Point2) -> [[f64; 2]; 2] {
                [[0.0, 0.0], [0.0, 0.0]]
            }
        }
        let beta = 2.0;
        let g = Grid2D::new(
            [[-4.0, 4.0], [-4.0, 4.0]],
            121,
            121,
            Potential::QuadraticOu,
            Thermo::new(beta),
        );
        let a = [0.6, -1.1];
        let (lhs, rhs, rel) = bochner_check(&g, &Linear(a));
        let exact = (a[0] * a[0] + a[1] * a[1]) / beta;
        assert!(rel <= 1e-3, "rel err {rel:e}");
        assert_relative_eq!(lhs, exact, max_relative = 1e-3);
        assert_relative_eq!(rhs, exact, max_relative = 1e-3);
    }

    #[test]
    fn slowness_rejects_constant_family() {
        let op = fd_generator(&small_ou_grid());
        let family = vec![vec![2.5; op.grid.len()]];
        let r = slowness_objective(&family, &op, &[1.0]);
        assert!(matches!(r, Err(Error::DegenerateFamily(_))));
    }

    #[test]
    fn coarse_grid_is_flagged() {
        // 7 nodes per axis cannot resolve the OU well.
        let g = Grid2D::new(
            [[-4.0, 4.0], [-4.0, 4.0]],
            7,
            7,
            Potential::QuadraticOu,
            Thermo::new(1.0),
        );
        assert!(matches!(
            check_grid_resolution(&g),
            Err(Error::GridTooCoarse(_))
        ));
        let fine = small_ou_grid();
        assert!(check_grid_resolution(&fine).is_ok());
    }
}
