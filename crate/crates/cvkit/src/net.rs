//! Minimal feed-forward network engine.
//!
//! Multilayer perceptrons with tanh hidden activations and an identity
//! output layer, stored as one flat `f64` parameter vector (per layer:
//! row-major weights, then biases). Besides plain forward/backward
//! passes, the engine differentiates objectives that contain input
//! gradients `grad_x f` through a dual-number forward pass followed by a
//! reverse pass over the augmented computation, which is all the
//! second-order structure the spectral losses need.
//!
//! All arithmetic is in f64; every pass uses a fixed reduction order so
//! identical inputs give bit-identical results.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Architecture: layer sizes from input to output, tanh on hidden layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
}

/// Hard ceiling on the parameter count; anything bigger is a malformed
/// or hostile spec, not a workable model.
const MAX_PARAMS: usize = 1 << 26;

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidSpec(
                "need at least an input and an output layer".into(),
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidSpec("layer sizes must be positive".into()));
        }
        let mut total: usize = 0;
        for w in layer_sizes.windows(2) {
            total = w[0]
                .checked_mul(w[1])
                .and_then(|p| p.checked_add(w[1]))
                .and_then(|p| p.checked_add(total))
                .ok_or_else(|| Error::InvalidSpec("parameter count overflows".into()))?;
        }
        if total > MAX_PARAMS {
            return Err(Error::InvalidSpec(format!(
                "parameter count {total} exceeds the supported maximum {MAX_PARAMS}"
            )));
        }
        Ok(MlpSpec { layer_sizes })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of affine layers.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Offset of layer `j`'s weight block in the flat parameter vector.
    fn weight_offset(&self, j: usize) -> usize {
        self.layer_sizes
            .windows(2)
            .take(j)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
}

/// Dot product with four-way unrolled accumulation. The association
/// order is fixed, so results are reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// Activations of one evaluation: `acts[l]` is the layer-`l` output,
/// `acts[0]` the input.
#[derive(Debug, Default, Clone)]
pub struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache not filled")
    }
}

/// Activations plus directional tangents of one dual evaluation.
/// `pre_tans[l]` holds the tangent of the layer-`l` pre-activation,
/// which the reverse pass needs at hidden layers.
#[derive(Debug, Default, Clone)]
pub struct DualCache {
    pub acts: Vec<Vec<f64>>,
    pub tans: Vec<Vec<f64>>,
    pre_tans: Vec<Vec<f64>>,
}

impl DualCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache not filled")
    }

    /// Tangent of the output, i.e. `J_x f` applied to the seed direction.
    pub fn output_tangent(&self) -> &[f64] {
        self.tans.last().expect("cache not filled")
    }
}

fn resize_stack(stack: &mut Vec<Vec<f64>>, sizes: &[usize]) {
    stack.resize_with(sizes.len(), Vec::new);
    for (buf, &s) in stack.iter_mut().zip(sizes) {
        buf.resize(s, 0.0);
    }
}

impl MlpModel {
    /// Deterministic initialization: weights uniform in
    /// `(-1/sqrt(fan_in), 1/sqrt(fan_in))` drawn layer by layer in flat
    /// parameter order, biases zero.
    pub fn init(spec: MlpSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(spec, &mut rng)
    }

    /// As [`MlpModel::init`], drawing from a caller-owned stream so that
    /// several models can share one seed in a documented order.
    pub fn init_with_rng(spec: MlpSpec, rng: &mut ChaCha8Rng) -> Self {
        let mut params = vec![0.0; spec.param_count()];
        let mut off = 0;
        for w in spec.layer_sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            for p in params[off..off + n_in * n_out].iter_mut() {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                *p = bound * (2.0 * u - 1.0);
            }
            off += n_in * n_out + n_out; // biases stay zero
        }
        MlpModel { spec, params }
    }

    pub fn from_params(spec: MlpSpec, params: Vec<f64>) -> Result<Self> {
        if params.len() != spec.param_count() {
            return Err(Error::InvalidSpec(format!(
                "parameter vector has length {}, spec requires {}",
                params.len(),
                spec.param_count()
            )));
        }
        Ok(MlpModel { spec, params })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    fn layer(&self, j: usize) -> (&[f64], &[f64], usize, usize) {
        let n_in = self.spec.layer_sizes[j];
        let n_out = self.spec.layer_sizes[j + 1];
        let off = self.spec.weight_offset(j);
        (
            &self.params[off..off + n_in * n_out],
            &self.params[off + n_in * n_out..off + n_in * n_out + n_out],
            n_in,
            n_out,
        )
    }

    pub fn forward_into(&self, x: &[f64], cache: &mut ForwardCache) {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        resize_stack(&mut cache.acts, &self.spec.layer_sizes);
        cache.acts[0].copy_from_slice(x);
        let depth = self.spec.depth();
        for j in 0..depth {
            let (w, b, n_in, n_out) = self.layer(j);
            let (lo, hi) = cache.acts.split_at_mut(j + 1);
            let a_in = &lo[j];
            let a_out = &mut hi[0];
            for o in 0..n_out {
                let z = b[o] + dot(&w[o * n_in..(o + 1) * n_in], a_in);
                a_out[o] = if j == depth - 1 { z } else { z.tanh() };
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_into(x, &mut cache);
        cache.acts.pop().unwrap()
    }

    /// Reverse pass. Accumulates `d(out_cot . f)/d(params)` into `grad`
    /// and writes the input cotangent (`J_x f` transposed applied to
    /// `out_cot`) into `in_cot`.
    pub fn backprop(
        &self,
        cache: &ForwardCache,
        out_cot: &[f64],
        grad: &mut [f64],
        in_cot: &mut Vec<f64>,
    ) {
        debug_assert_eq!(grad.len(), self.spec.param_count());
        let depth = self.spec.depth();
        let mut cur = out_cot.to_vec();
        let mut dz = Vec::new();
        for j in (0..depth).rev() {
            let (w, _b, n_in, n_out) = self.layer(j);
            let a_out = &cache.acts[j + 1];
            dz.resize(n_out, 0.0);
            if j == depth - 1 {
                dz.copy_from_slice(&cur);
            } else {
                for o in 0..n_out {
                    dz[o] = cur[o] * (1.0 - a_out[o] * a_out[o]);
                }
            }
            let a_in = &cache.acts[j];
            let off = self.spec.weight_offset(j);
            for o in 0..n_out {
                let d = dz[o];
                let wg = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for i in 0..n_in {
                    wg[i] += d * a_in[i];
                }
            }
            let bg = &mut grad[off + n_in * n_out..off + n_in * n_out + n_out];
            for o in 0..n_out {
                bg[o] += dz[o];
            }
            cur = (0..n_in)
                .map(|i| (0..n_out).map(|o| w[o * n_in + i] * dz[o]).fold(0.0, |s, t| s + t))
                .collect();
        }
        in_cot.clear();
        in_cot.extend_from_slice(&cur);
    }

    /// Forward pass carrying a tangent direction `xdot` through the
    /// network (dual numbers in the input argument).
    pub fn dual_forward_into(&self, x: &[f64], xdot: &[f64], cache: &mut DualCache) {
        assert_eq!(x.len(), self.input_dim());
        assert_eq!(xdot.len(), self.input_dim());
        let sizes = &self.spec.layer_sizes;
        resize_stack(&mut cache.acts, sizes);
        resize_stack(&mut cache.tans, sizes);
        resize_stack(&mut cache.pre_tans, sizes);
        cache.acts[0].copy_from_slice(x);
        cache.tans[0].copy_from_slice(xdot);
        let depth = self.spec.depth();
        for j in 0..depth {
            let (w, b, n_in, n_out) = self.layer(j);
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = b[o] + dot(row, &cache.acts[j]);
                let zd = dot(row, &cache.tans[j]);
                cache.pre_tans[j + 1][o] = zd;
                if j == depth - 1 {
                    cache.acts[j + 1][o] = z;
                    cache.tans[j + 1][o] = zd;
                } else {
                    let a = z.tanh();
                    cache.acts[j + 1][o] = a;
                    cache.tans[j + 1][o] = (1.0 - a * a) * zd;
                }
            }
        }
    }

    /// Reverse pass over a dual evaluation: accumulates
    /// `d(out_cot . f  +  out_tan_cot . fdot)/d(params)` into `grad`,
    /// where `fdot` is the output tangent of `cache`. With
    /// `out_tan_cot = c` and tangent seed `xdot = v` this yields exact
    /// parameter gradients of directional derivatives `c . (J_x f v)`,
    /// the building block for losses containing `|grad_x f|^2`.
    pub fn dual_backprop(
        &self,
        cache: &DualCache,
        out_cot: &[f64],
        out_tan_cot: &[f64],
        grad: &mut [f64],
    ) {
        debug_assert_eq!(grad.len(), self.spec.param_count());
        let depth = self.spec.depth();
        let mut cur = out_cot.to_vec();
        let mut curt = out_tan_cot.to_vec();
        let mut dz = Vec::new();
        let mut dzd = Vec::new();
        for j in (0..depth).rev() {
            let (w, _b, n_in, n_out) = self.layer(j);
            dz.resize(n_out, 0.0);
            dzd.resize(n_out, 0.0);
            if j == depth - 1 {
                dz.copy_from_slice(&cur);
                dzd.copy_from_slice(&curt);
            } else {
                let a_out = &cache.acts[j + 1];
                let zd = &cache.pre_tans[j + 1];
                for o in 0..n_out {
                    let a = a_out[o];
                    let sp = 1.0 - a * a; // tanh'
                    let spp = -2.0 * a * sp; // tanh''
                    dz[o] = cur[o] * sp + curt[o] * zd[o] * spp;
                    dzd[o] = curt[o] * sp;
                }
            }
            let a_in = &cache.acts[j];
            let t_in = &cache.tans[j];
            let off = self.spec.weight_offset(j);
            for o in 0..n_out {
                let (d, dd) = (dz[o], dzd[o]);
                let wg = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for i in 0..n_in {
                    wg[i] += d * a_in[i] + dd * t_in[i];
                }
            }
            let bg = &mut grad[off + n_in * n_out..off + n_in * n_out + n_out];
            for o in 0..n_out {
                bg[o] += dz[o];
            }
            let mut next = vec![0.0; n_in];
            let mut nextt = vec![0.0; n_in];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let (d, dd) = (dz[o], dzd[o]);
                for i in 0..n_in {
                    next[i] += row[i] * d;
                    nextt[i] += row[i] * dd;
                }
            }
            cur = next;
            curt = nextt;
        }
    }

    /// Exact Jacobian `d(output)/d(input)`, row `o` column `i`, computed
    /// by one dual forward pass per input coordinate.
    pub fn input_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n_in = self.input_dim();
        let n_out = self.output_dim();
        let mut jac = vec![vec![0.0; n_in]; n_out];
        let mut cache = DualCache::default();
        let mut e = vec![0.0; n_in];
        for i in 0..n_in {
            e[i] = 1.0;
            self.dual_forward_into(x, &e, &mut cache);
            for o in 0..n_out {
                jac[o][i] = cache.output_tangent()[o];
            }
            e[i] = 0.0;
        }
        jac
    }

    /// Gradient of a scalar-output network with respect to its input.
    pub fn input_gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.output_dim(), 1, "input_gradient needs scalar output");
        self.input_jacobian(x).pop().unwrap()
    }
}

/// Batch-major activation storage: `acts[l]` holds layer `l` as `n_l`
/// contiguous rows of length `b` (neuron-major), which keeps the hot
/// loops unit-stride over the batch.
#[derive(Debug, Default, Clone)]
pub struct BatchCache {
    pub b: usize,
    pub acts: Vec<Vec<f64>>,
}

impl BatchCache {
    /// Output row `o` (length `b`).
    pub fn output_row(&self, o: usize) -> &[f64] {
        let last = self.acts.last().expect("cache not filled");
        &last[o * self.b..(o + 1) * self.b]
    }
}

#[inline]
fn axpy_row(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// `y += c0 x0 + c1 x1` fused over one row write.
#[inline]
fn axpy2_row(c0: f64, x0: &[f64], c1: f64, x1: &[f64], y: &mut [f64]) {
    for ((yi, a), b) in y.iter_mut().zip(x0).zip(x1) {
        *yi += c0 * a + c1 * b;
    }
}

#[inline]
fn dot_row(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}

impl MlpModel {
    /// Transpose an AoS point slice into the `[n0][b]` row layout.
    pub fn transpose_inputs(points: &[crate::Point2]) -> Vec<f64> {
        let b = points.len();
        let mut out = vec![0.0; 2 * b];
        for (s, p) in points.iter().enumerate() {
            out[s] = p[0];
            out[b + s] = p[1];
        }
        out
    }

    /// Batched forward pass over `b` samples; `xs` is `[input_dim][b]`
    /// neuron-major.
    pub fn forward_batch_into(&self, xs: &[f64], b: usize, cache: &mut BatchCache) {
        assert_eq!(xs.len(), self.input_dim() * b);
        cache.b = b;
        cache
            .acts
            .resize_with(self.spec.layer_sizes.len(), Vec::new);
        for (buf, &n) in cache.acts.iter_mut().zip(&self.spec.layer_sizes) {
            buf.resize(n * b, 0.0);
        }
        cache.acts[0].copy_from_slice(xs);
        let depth = self.spec.depth();
        for j in 0..depth {
            let (w, bias, n_in, n_out) = self.layer(j);
            let (lo, hi) = cache.acts.split_at_mut(j + 1);
            let a_in = &lo[j];
            let z = &mut hi[0];
            for o in 0..n_out {
                let row = &mut z[o * b..(o + 1) * b];
                row.fill(bias[o]);
                let mut i = 0;
                while i + 1 < n_in {
                    axpy2_row(
                        w[o * n_in + i],
                        &a_in[i * b..(i + 1) * b],
                        w[o * n_in + i + 1],
                        &a_in[(i + 1) * b..(i + 2) * b],
                        row,
                    );
                    i += 2;
                }
                if i < n_in {
                    axpy_row(w[o * n_in + i], &a_in[i * b..(i + 1) * b], row);
                }
                if j != depth - 1 {
                    for v in row.iter_mut() {
                        *v = v.tanh();
                    }
                }
            }
        }
    }

    /// Batched reverse pass: accumulates parameter gradients for the
    /// summed objective `sum_s out_cot[., s] . f(x_s)` and writes the
    /// per-sample input cotangents (`[input_dim][b]`).
    pub fn backprop_batch(
        &self,
        cache: &BatchCache,
        out_cot: &[f64],
        grad: &mut [f64],
        in_cot: &mut Vec<f64>,
    ) {
        let b = cache.b;
        assert_eq!(out_cot.len(), self.output_dim() * b);
        let depth = self.spec.depth();
        let mut cur = out_cot.to_vec();
        let mut dz: Vec<f64> = Vec::new();
        for j in (0..depth).rev() {
            let (w, _bias, n_in, n_out) = self.layer(j);
            let a_out = &cache.acts[j + 1];
            dz.resize(n_out * b, 0.0);
            if j == depth - 1 {
                dz.copy_from_slice(&cur);
            } else {
                for idx in 0..n_out * b {
                    let a = a_out[idx];
                    dz[idx] = cur[idx] * (1.0 - a * a);
                }
            }
            let a_in = &cache.acts[j];
            let off = self.spec.weight_offset(j);
            for o in 0..n_out {
                let dz_row = &dz[o * b..(o + 1) * b];
                for i in 0..n_in {
                    grad[off + o * n_in + i] += dot_row(dz_row, &a_in[i * b..(i + 1) * b]);
                }
                grad[off + n_in * n_out + o] += dz_row.iter().sum::<f64>();
            }
            let mut next = vec![0.0; n_in * b];
            for i in 0..n_in {
                let next_row = &mut next[i * b..(i + 1) * b];
                let mut o = 0;
                while o + 1 < n_out {
                    axpy2_row(
                        w[o * n_in + i],
                        &dz[o * b..(o + 1) * b],
                        w[(o + 1) * n_in + i],
                        &dz[(o + 1) * b..(o + 2) * b],
                        next_row,
                    );
                    o += 2;
                }
                if o < n_out {
                    axpy_row(w[o * n_in + i], &dz[o * b..(o + 1) * b], next_row);
                }
            }
            cur = next;
        }
        in_cot.clear();
        in_cot.extend_from_slice(&cur);
    }
}

/// Adam hyperparameters; the defaults are the optimizer's canonical ones.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment accumulators for one parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hp: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n_params: usize, hp: AdamParams) -> Self {
        AdamState {
            hp,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// One bias-corrected Adam update, in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.hp.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.hp.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.hp.beta1 * self.m[i] + (1.0 - self.hp.beta1) * g;
            self.v[i] = self.hp.beta2 * self.v[i] + (1.0 - self.hp.beta2) * g * g;
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= self.hp.lr * mhat / (vhat.sqrt() + self.hp.eps);
        }
    }
}
