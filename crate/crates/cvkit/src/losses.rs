//! Training objectives: spectral (Rayleigh-quotient) losses for
//! generator and transfer-operator eigenfunctions, and (time-lagged)
//! autoencoder reconstruction losses.
//!
//! The two spectral losses share the same structure
//!
//! ```text
//! sum_i w_i * energy_i / (Var f_i + eps)
//!     + alpha * sum_{i1 <= i2} (Cov(f_i1, f_i2) - delta_{i1 i2})^2
//! ```
//!
//! where the energy is `E|grad f_i|^2 / beta` for the generator and
//! `E|f_i(y) - f_i(x)|^2 / (2 tau)` for the transfer operator. Variance
//! denominators are differentiated through, not detached. All gradients
//! are exact reverse-mode gradients; the generator loss additionally
//! differentiates through the input-gradient computation via
//! [`MlpModel::dual_backprop`].

use rayon::prelude::*;

use crate::net::{BatchCache, DualCache, ForwardCache, MlpModel};
use crate::{Error, Point2, Result};

/// Samples per parallel work unit; partial results are combined in chunk
/// order so totals do not depend on the thread count.
const CHUNK: usize = 1024;

/// Configuration shared by the two eigenfunction losses.
#[derive(Debug, Clone)]
pub struct EigenLossConfig {
    /// Number of eigenfunctions trained jointly.
    pub k: usize,
    /// Non-increasing positive weights, one per eigenfunction.
    pub omegas: Vec<f64>,
    /// Penalty constant for the orthonormality constraint.
    pub alpha: f64,
    /// Inverse temperature (generator loss only).
    pub beta: f64,
    /// Lag time (transfer loss only).
    pub tau: f64,
    /// Guard added to every variance denominator.
    pub var_guard: f64,
}

impl EigenLossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.omegas.len() != self.k {
            return Err(Error::InvalidConfig(format!(
                "expected {} omegas, got {}",
                self.k,
                self.omegas.len()
            )));
        }
        if self.omegas.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidConfig("omegas must be positive".into()));
        }
        if self.omegas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("omegas must be non-increasing".into()));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidConfig("alpha must be non-negative".into()));
        }
        if self.var_guard <= 0.0 {
            return Err(Error::InvalidConfig("var_guard must be positive".into()));
        }
        Ok(())
    }
}

/// Loss value split into its Rayleigh part and the penalty part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub rayleigh: f64,
    pub penalty: f64,
}

/// Empirical means, variances and covariance matrix of `k` features.
///
/// `features[i]` holds feature `i` evaluated on every sample. The
/// covariance is mean-centered and `1/N`-normalized; variances are its
/// diagonal.
#[derive(Debug, Clone)]
pub struct Stats {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

pub fn empirical_stats(features: &[Vec<f64>]) -> Result<Stats> {
    let k = features.len();
    assert!(k >= 1, "need at least one feature");
    let n = features[0].len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    for f in features {
        assert_eq!(f.len(), n, "features must share the sample count");
    }
    let nf = n as f64;
    let means: Vec<f64> = features.iter().map(|f| f.iter().sum::<f64>() / nf).collect();
    let mut covariance = vec![vec![0.0; k]; k];
    for i in 0..k {
        for l in i..k {
            let mut s = 0.0;
            for t in 0..n {
                s += (features[i][t] - means[i]) * (features[l][t] - means[l]);
            }
            covariance[i][l] = s / nf;
            covariance[l][i] = covariance[i][l];
        }
    }
    let variances = (0..k).map(|i| covariance[i][i]).collect();
    Ok(Stats {
        means,
        variances,
        covariance,
    })
}

fn penalty_value(cov: &[Vec<f64>], alpha: f64) -> f64 {
    let k = cov.len();
    let mut pen = 0.0;
    for i in 0..k {
        for l in i..k {
            let delta = if i == l { 1.0 } else { 0.0 };
            let d = cov[i][l] - delta;
            pen += d * d;
        }
    }
    alpha * pen
}

fn check_eigen_models(models: &[MlpModel], cfg: &EigenLossConfig) -> Result<()> {
    cfg.validate()?;
    if models.len() != cfg.k {
        return Err(Error::DimensionMismatch(format!(
            "{} models for k = {}",
            models.len(),
            cfg.k
        )));
    }
    for m in models {
        if m.output_dim() != 1 {
            return Err(Error::DimensionMismatch(
                "eigenfunction models must have scalar output".into(),
            ));
        }
        if m.input_dim() != 2 {
            return Err(Error::DimensionMismatch(
                "eigenfunction models must take 2-dimensional states".into(),
            ));
        }
    }
    Ok(())
}

/// Evaluate a scalar model on every point, in order.
pub fn feature_values(model: &MlpModel, points: &[Point2]) -> Vec<f64> {
    points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut cache = ForwardCache::default();
            chunk
                .iter()
                .map(|x| {
                    model.forward_into(x, &mut cache);
                    cache.output()[0]
                })
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Per-sample values and input gradients of a scalar model.
fn values_and_gradients(model: &MlpModel, points: &[Point2]) -> (Vec<f64>, Vec<Point2>) {
    let n_params = model.spec.param_count();
    let per_chunk: Vec<(Vec<f64>, Vec<Point2>)> = points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut cache = ForwardCache::default();
            let mut in_cot = Vec::new();
            // Parameter gradients are discarded in this pass.
            let mut sink = vec![0.0; n_params];
            let mut vals = Vec::with_capacity(chunk.len());
            let mut grads = Vec::with_capacity(chunk.len());
            for x in chunk {
                model.forward_into(x, &mut cache);
                vals.push(cache.output()[0]);
                model.backprop(&cache, &[1.0], &mut sink, &mut in_cot);
                grads.push([in_cot[0], in_cot[1]]);
            }
            (vals, grads)
        })
        .collect();
    let mut vals = Vec::with_capacity(points.len());
    let mut grads = Vec::with_capacity(points.len());
    for (v, g) in per_chunk {
        vals.extend(v);
        grads.extend(g);
    }
    (vals, grads)
}

/// Cotangents of the stats-dependent loss part with respect to the
/// per-sample feature values. For feature `i`,
/// `dL/dy_s = (dL/dVar_i + 2 alpha (C_ii - 1)) * 2 (y_s - m_i) / N
///          + sum_{l != i} 2 alpha C_il (y^l_s - m_l) / N`.
fn stats_value_cotangents(
    values: &[Vec<f64>],
    stats: &Stats,
    denom_cot: &[f64],
    alpha: f64,
) -> Vec<Vec<f64>> {
    let k = values.len();
    let n = values[0].len();
    let nf = n as f64;
    let mut cot = vec![vec![0.0; n]; k];
    for i in 0..k {
        let diag = denom_cot[i] + 2.0 * alpha * (stats.covariance[i][i] - 1.0);
        for s in 0..n {
            let mut c = diag * 2.0 * (values[i][s] - stats.means[i]) / nf;
            for l in 0..k {
                if l != i {
                    c += 2.0 * alpha * stats.covariance[i][l] * (values[l][s] - stats.means[l])
                        / nf;
                }
            }
            cot[i][s] = c;
        }
    }
    cot
}

/// Accumulate per-sample parameter-gradient contributions in parallel,
/// combining partial sums in chunk order.
fn accumulate_grad<F>(n_samples: usize, n_params: usize, per_sample: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let n_chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = vec![0.0; n_params];
            for s in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                per_sample(s, &mut local);
            }
            local
        })
        .collect();
    let mut grad = vec![0.0; n_params];
    for p in partials {
        for (g, v) in grad.iter_mut().zip(&p) {
            *g += v;
        }
    }
    grad
}

/// Spectral loss for generator eigenfunctions.
pub fn eigen_generator_loss(
    models: &[MlpModel],
    batch: &[Point2],
    cfg: &EigenLossConfig,
) -> Result<LossParts> {
    Ok(eigen_generator_parts(models, batch, cfg)?.0)
}

type GeneratorParts = (LossParts, Vec<Vec<f64>>, Vec<Vec<Point2>>, Stats);

fn eigen_generator_parts(
    models: &[MlpModel],
    batch: &[Point2],
    cfg: &EigenLossConfig,
) -> Result<GeneratorParts> {
    check_eigen_models(models, cfg)?;
    if cfg.beta <= 0.0 {
        return Err(Error::InvalidConfig("generator loss needs beta > 0".into()));
    }
    let mut values = Vec::with_capacity(cfg.k);
    let mut grads = Vec::with_capacity(cfg.k);
    for m in models {
        let (v, g) = values_and_gradients(m, batch);
        values.push(v);
        grads.push(g);
    }
    let stats = empirical_stats(&values)?;
    let n = batch.len() as f64;
    let mut rayleigh = 0.0;
    for i in 0..cfg.k {
        let mean_sq_grad = grads[i]
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1])
            .sum::<f64>()
            / n;
        rayleigh += cfg.omegas[i] * mean_sq_grad / (stats.variances[i] + cfg.var_guard);
    }
    rayleigh /= cfg.beta;
    let penalty = penalty_value(&stats.covariance, cfg.alpha);
    Ok((
        LossParts {
            total: rayleigh + penalty,
            rayleigh,
            penalty,
        },
        values,
        grads,
        stats,
    ))
}

/// Loss and exact parameter gradients (one vector per model).
pub fn eigen_generator_loss_grad(
    models: &[MlpModel],
    batch: &[Point2],
    cfg: &EigenLossConfig,
) -> Result<(LossParts, Vec<Vec<f64>>)> {
    let (parts, values, grads, stats) = eigen_generator_parts(models, batch, cfg)?;
    let n = batch.len() as f64;
    // d loss / d Var_i from the Rayleigh denominator.
    let denom_cot: Vec<f64> = (0..cfg.k)
        .map(|i| {
            let mean_sq_grad = grads[i]
                .iter()
                .map(|g| g[0] * g[0] + g[1] * g[1])
                .sum::<f64>()
                / n;
            let v = stats.variances[i] + cfg.var_guard;
            -cfg.omegas[i] / cfg.beta * mean_sq_grad / (v * v)
        })
        .collect();
    let val_cot = stats_value_cotangents(&values, &stats, &denom_cot, cfg.alpha);

    let mut out = Vec::with_capacity(cfg.k);
    for (i, model) in models.iter().enumerate() {
        // d loss / d |grad f_i(x_s)|^2, identical across samples.
        let q_cot = cfg.omegas[i] / cfg.beta / (n * (stats.variances[i] + cfg.var_guard));
        let cots = &val_cot[i];
        let sample_grads = &grads[i];
        let n_params = model.spec.param_count();
        let n_chunks = batch.len().div_ceil(CHUNK);
        // One dual pass per sample, seeded along 2 * grad f(x_s) so the
        // tangent cotangent contributes d|grad f|^2 / d params.
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut local = vec![0.0; n_params];
                let mut cache = DualCache::default();
                for s in c * CHUNK..((c + 1) * CHUNK).min(batch.len()) {
                    let g = sample_grads[s];
                    let dir = [2.0 * g[0], 2.0 * g[1]];
                    model.dual_forward_into(&batch[s], &dir, &mut cache);
                    model.dual_backprop(&cache, &[cots[s]], &[q_cot], &mut local);
                }
                local
            })
            .collect();
        let mut grad = vec![0.0; n_params];
        for p in partials {
            for (g, v) in grad.iter_mut().zip(&p) {
                *g += v;
            }
        }
        out.push(grad);
    }
    Ok((parts, out))
}

/// Spectral loss for transfer-operator eigenfunctions. `stats_batch`
/// carries the points on which variances and covariances are estimated
/// (by convention the x-components of the pair batch).
pub fn eigen_transfer_loss(
    models: &[MlpModel],
    pairs: &[(Point2, Point2)],
    stats_batch: &[Point2],
    cfg: &EigenLossConfig,
) -> Result<LossParts> {
    let (parts, ..) = eigen_transfer_parts(models, pairs, stats_batch, cfg)?;
    Ok(parts)
}

type TransferParts = (LossParts, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>, Stats);

fn eigen_transfer_parts(
    models: &[MlpModel],
    pairs: &[(Point2, Point2)],
    stats_batch: &[Point2],
    cfg: &EigenLossConfig,
) -> Result<TransferParts> {
    check_eigen_models(models, cfg)?;
    if cfg.tau <= 0.0 {
        return Err(Error::InvalidConfig("transfer loss needs tau > 0".into()));
    }
    if pairs.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let xs: Vec<Point2> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<Point2> = pairs.iter().map(|p| p.1).collect();
    let mut fx = Vec::with_capacity(cfg.k);
    let mut fy = Vec::with_capacity(cfg.k);
    let mut fstats = Vec::with_capacity(cfg.k);
    for m in models {
        fx.push(feature_values(m, &xs));
        fy.push(feature_values(m, &ys));
        fstats.push(feature_values(m, stats_batch));
    }
    let stats = empirical_stats(&fstats)?;
    let np = pairs.len() as f64;
    let mut rayleigh = 0.0;
    for i in 0..cfg.k {
        let mean_sq_diff = fx[i]
            .iter()
            .zip(&fy[i])
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            / np;
        rayleigh += cfg.omegas[i] * mean_sq_diff / (stats.variances[i] + cfg.var_guard);
    }
    rayleigh /= 2.0 * cfg.tau;
    let penalty = penalty_value(&stats.covariance, cfg.alpha);
    Ok((
        LossParts {
            total: rayleigh + penalty,
            rayleigh,
            penalty,
        },
        fx,
        fy,
        fstats,
        stats,
    ))
}

pub fn eigen_transfer_loss_grad(
    models: &[MlpModel],
    pairs: &[(Point2, Point2)],
    stats_batch: &[Point2],
    cfg: &EigenLossConfig,
) -> Result<(LossParts, Vec<Vec<f64>>)> {
    let (parts, fx, fy, fstats, stats) = eigen_transfer_parts(models, pairs, stats_batch, cfg)?;
    let np = pairs.len() as f64;
    let denom_cot: Vec<f64> = (0..cfg.k)
        .map(|i| {
            let mean_sq_diff = fx[i]
                .iter()
                .zip(&fy[i])
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                / np;
            let v = stats.variances[i] + cfg.var_guard;
            -cfg.omegas[i] / (2.0 * cfg.tau) * mean_sq_diff / (v * v)
        })
        .collect();
    let val_cot = stats_value_cotangents(&fstats, &stats, &denom_cot, cfg.alpha);

    let mut out = Vec::with_capacity(cfg.k);
    for (i, model) in models.iter().enumerate() {
        let n_params = model.spec.param_count();
        // Pair term: d/d f(x_s) = -scale * diff, d/d f(y_s) = +scale * diff.
        let scale = cfg.omegas[i] / (cfg.tau * np * (stats.variances[i] + cfg.var_guard));
        let fxi = &fx[i];
        let fyi = &fy[i];
        let mut grad = accumulate_grad(pairs.len(), n_params, |s, local| {
            let diff = fyi[s] - fxi[s];
            let mut cache = ForwardCache::default();
            let mut sink = Vec::new();
            model.forward_into(&pairs[s].0, &mut cache);
            model.backprop(&cache, &[-scale * diff], local, &mut sink);
            model.forward_into(&pairs[s].1, &mut cache);
            model.backprop(&cache, &[scale * diff], local, &mut sink);
        });
        let cots = &val_cot[i];
        let stats_grad = accumulate_grad(stats_batch.len(), n_params, |s, local| {
            let mut cache = ForwardCache::default();
            let mut sink = Vec::new();
            model.forward_into(&stats_batch[s], &mut cache);
            model.backprop(&cache, &[cots[s]], local, &mut sink);
        });
        for (g, v) in grad.iter_mut().zip(&stats_grad) {
            *g += v;
        }
        out.push(grad);
    }
    Ok((parts, out))
}

fn check_autoencoder(enc: &MlpModel, dec: &MlpModel) -> Result<()> {
    if enc.input_dim() != 2 || dec.output_dim() != 2 {
        return Err(Error::DimensionMismatch(
            "autoencoder must map 2-dimensional states to themselves".into(),
        ));
    }
    if enc.output_dim() != dec.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "encoder output {} does not match decoder input {}",
            enc.output_dim(),
            dec.input_dim()
        )));
    }
    Ok(())
}

/// Shared reconstruction core: mean of `|dec(enc(input)) - target|^2`
/// over `(input, target)` pairs produced by `pair_at`.
fn reconstruction_loss<F>(enc: &MlpModel, dec: &MlpModel, n: usize, pair_at: F) -> Result<f64>
where
    F: Fn(usize) -> (Point2, Point2) + Sync,
{
    check_autoencoder(enc, dec)?;
    if n == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let n_chunks = n.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut ec = ForwardCache::default();
            let mut dc = ForwardCache::default();
            let mut sum = 0.0;
            for s in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let (x, t) = pair_at(s);
                enc.forward_into(&x, &mut ec);
                dec.forward_into(ec.output(), &mut dc);
                let r = dc.output();
                sum += (r[0] - t[0]) * (r[0] - t[0]) + (r[1] - t[1]) * (r[1] - t[1]);
            }
            sum
        })
        .collect();
    Ok(partial.iter().sum::<f64>() / n as f64)
}

fn reconstruction_loss_grad<F>(
    enc: &MlpModel,
    dec: &MlpModel,
    n: usize,
    pair_at: F,
) -> Result<(f64, Vec<f64>, Vec<f64>)>
where
    F: Fn(usize) -> (Point2, Point2) + Sync,
{
    check_autoencoder(enc, dec)?;
    if n == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let ne = enc.spec.param_count();
    let nd = dec.spec.param_count();
    let k = enc.output_dim();
    let n_chunks = n.div_ceil(CHUNK);
    let inv_n = 1.0 / n as f64;
    let partial: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let b = hi - lo;
            let mut xs = vec![0.0; 2 * b];
            let mut targets = vec![[0.0f64; 2]; b];
            for s in 0..b {
                let (x, t) = pair_at(lo + s);
                xs[s] = x[0];
                xs[b + s] = x[1];
                targets[s] = t;
            }
            let mut ec = BatchCache::default();
            let mut dc = BatchCache::default();
            enc.forward_batch_into(&xs, b, &mut ec);
            dec.forward_batch_into(ec.acts.last().unwrap(), b, &mut dc);
            let mut sum = 0.0;
            let mut out_cot = vec![0.0; 2 * b];
            for s in 0..b {
                let r = [dc.output_row(0)[s], dc.output_row(1)[s]];
                let res = [r[0] - targets[s][0], r[1] - targets[s][1]];
                sum += res[0] * res[0] + res[1] * res[1];
                out_cot[s] = 2.0 * inv_n * res[0];
                out_cot[b + s] = 2.0 * inv_n * res[1];
            }
            let mut ge = vec![0.0; ne];
            let mut gd = vec![0.0; nd];
            let mut z_cot = Vec::new();
            let mut sink = Vec::new();
            dec.backprop_batch(&dc, &out_cot, &mut gd, &mut z_cot);
            debug_assert_eq!(z_cot.len(), k * b);
            enc.backprop_batch(&ec, &z_cot, &mut ge, &mut sink);
            (sum, ge, gd)
        })
        .collect();
    let mut loss = 0.0;
    let mut ge = vec![0.0; ne];
    let mut gd = vec![0.0; nd];
    for (s, pe, pd) in partial {
        loss += s;
        for (g, v) in ge.iter_mut().zip(&pe) {
            *g += v;
        }
        for (g, v) in gd.iter_mut().zip(&pd) {
            *g += v;
        }
    }
    Ok((loss / n as f64, ge, gd))
}

/// Training-path variant of the transfer loss with the statistics batch
/// fixed to the x-marginal of `pairs` (the training convention). The
/// forward activations are computed once per endpoint and reused by the
/// reverse pass; the loss value matches [`eigen_transfer_loss`] with
/// `stats_batch` set to the pair x-components.
pub fn eigen_transfer_train_step(
    models: &[MlpModel],
    pairs: &[(Point2, Point2)],
    cfg: &EigenLossConfig,
) -> Result<(LossParts, Vec<Vec<f64>>)> {
    check_eigen_models(models, cfg)?;
    if cfg.tau <= 0.0 {
        return Err(Error::InvalidConfig("transfer loss needs tau > 0".into()));
    }
    if pairs.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let np = pairs.len();
    let npf = np as f64;
    let n_chunks = np.div_ceil(CHUNK);

    // Phase 1 per model: batched forwards with cached activations.
    struct ModelPass {
        x_caches: Vec<BatchCache>,
        y_caches: Vec<BatchCache>,
        fx: Vec<f64>,
        fy: Vec<f64>,
    }
    let mut passes = Vec::with_capacity(cfg.k);
    for model in models {
        let caches: Vec<(BatchCache, BatchCache)> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(np);
                let b = hi - lo;
                let mut xs = vec![0.0; 2 * b];
                let mut ys = vec![0.0; 2 * b];
                for s in 0..b {
                    let (x, y) = pairs[lo + s];
                    xs[s] = x[0];
                    xs[b + s] = x[1];
                    ys[s] = y[0];
                    ys[b + s] = y[1];
                }
                let mut xc = BatchCache::default();
                let mut yc = BatchCache::default();
                model.forward_batch_into(&xs, b, &mut xc);
                model.forward_batch_into(&ys, b, &mut yc);
                (xc, yc)
            })
            .collect();
        let mut fx = Vec::with_capacity(np);
        let mut fy = Vec::with_capacity(np);
        let mut x_caches = Vec::with_capacity(n_chunks);
        let mut y_caches = Vec::with_capacity(n_chunks);
        for (xc, yc) in caches {
            fx.extend_from_slice(xc.output_row(0));
            fy.extend_from_slice(yc.output_row(0));
            x_caches.push(xc);
            y_caches.push(yc);
        }
        passes.push(ModelPass {
            x_caches,
            y_caches,
            fx,
            fy,
        });
    }

    let fstats: Vec<Vec<f64>> = passes.iter().map(|p| p.fx.clone()).collect();
    let stats = empirical_stats(&fstats)?;
    let mut rayleigh = 0.0;
    let mut mean_sq_diffs = Vec::with_capacity(cfg.k);
    for (i, p) in passes.iter().enumerate() {
        let msd = p
            .fx
            .iter()
            .zip(&p.fy)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            / npf;
        mean_sq_diffs.push(msd);
        rayleigh += cfg.omegas[i] * msd / (stats.variances[i] + cfg.var_guard);
    }
    rayleigh /= 2.0 * cfg.tau;
    let penalty = penalty_value(&stats.covariance, cfg.alpha);
    let parts = LossParts {
        total: rayleigh + penalty,
        rayleigh,
        penalty,
    };

    let denom_cot: Vec<f64> = (0..cfg.k)
        .map(|i| {
            let v = stats.variances[i] + cfg.var_guard;
            -cfg.omegas[i] / (2.0 * cfg.tau) * mean_sq_diffs[i] / (v * v)
        })
        .collect();
    let val_cot = stats_value_cotangents(&fstats, &stats, &denom_cot, cfg.alpha);

    // Phase 2 per model: one reverse pass per endpoint with the summed
    // cotangents (pair term plus stats term on the x side).
    let mut out = Vec::with_capacity(cfg.k);
    for (i, (model, pass)) in models.iter().zip(&passes).enumerate() {
        let n_params = model.spec.param_count();
        let scale = cfg.omegas[i] / (cfg.tau * npf * (stats.variances[i] + cfg.var_guard));
        let cots = &val_cot[i];
        let (fx, fy) = (&pass.fx, &pass.fy);
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(np);
                let b = hi - lo;
                let mut local = vec![0.0; n_params];
                let mut x_cot = vec![0.0; b];
                let mut y_cot = vec![0.0; b];
                for s in 0..b {
                    let diff = fy[lo + s] - fx[lo + s];
                    x_cot[s] = -scale * diff + cots[lo + s];
                    y_cot[s] = scale * diff;
                }
                let mut sink = Vec::new();
                model.backprop_batch(&pass.x_caches[c], &x_cot, &mut local, &mut sink);
                model.backprop_batch(&pass.y_caches[c], &y_cot, &mut local, &mut sink);
                local
            })
            .collect();
        let mut grad = vec![0.0; n_params];
        for p in partials {
            for (g, v) in grad.iter_mut().zip(&p) {
                *g += v;
            }
        }
        out.push(grad);
    }
    Ok((parts, out))
}

/// Plain reconstruction error over a batch of states.
pub fn ae_loss(enc: &MlpModel, dec: &MlpModel, batch: &[Point2]) -> Result<f64> {
    reconstruction_loss(enc, dec, batch.len(), |s| (batch[s], batch[s]))
}

pub fn ae_loss_grad(
    enc: &MlpModel,
    dec: &MlpModel,
    batch: &[Point2],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    reconstruction_loss_grad(enc, dec, batch.len(), |s| (batch[s], batch[s]))
}

/// Time-lagged reconstruction error over `(x, y)` pairs; with lag zero
/// the pairs are `(x, x)` and this reduces to [`ae_loss`] exactly.
pub fn tlae_loss(enc: &MlpModel, dec: &MlpModel, pairs: &[(Point2, Point2)]) -> Result<f64> {
    reconstruction_loss(enc, dec, pairs.len(), |s| pairs[s])
}

pub fn tlae_loss_grad(
    enc: &MlpModel,
    dec: &MlpModel,
    pairs: &[(Point2, Point2)],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    reconstruction_loss_grad(enc, dec, pairs.len(), |s| pairs[s])
}
