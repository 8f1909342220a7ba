//! Config-driven experiment pipelines: sample, train, evaluate, and the
//! oracle/MEP report generators, with all artifacts written to one
//! output directory.
//!
//! Every pipeline is deterministic given its configuration: model
//! initialization, epoch shuffling and batch reductions all derive from
//! the configured seeds with fixed orders, and artifact files contain no
//! wall-clock information (timings go to `run.log` only).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, Task};
use crate::io::{self, EpochMetrics};
use crate::losses::{
    ae_loss_grad, eigen_generator_loss_grad, eigen_transfer_train_step, feature_values,
    tlae_loss_grad, EigenLossConfig,
};
use crate::net::{AdamParams, AdamState, MlpModel, MlpSpec};
use crate::oracle::{
    conditional_moments, fd_generator, ulam_spectrum, ulam_transfer, BinSpec, Grid2D, ScalarCv,
};
use crate::potentials::Thermo;
use crate::sampler::{lagged_pairs, simulate, subsample, Dataset, DatasetMeta, PairDataset};
use crate::{mep, Error, Point2, Result};

/// Spectral estimate for one trained eigenfunction.
#[derive(Debug, Clone, Serialize)]
pub struct EigenEstimate {
    pub index: usize,
    /// Transfer-operator eigenvalue estimate (lagged data only).
    pub nu: Option<f64>,
    /// Generator eigenvalue estimate.
    pub lambda: f64,
    pub variance: f64,
}

/// Outcome of a pipeline run, with the numbers tests care about.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub metrics: Vec<EpochMetrics>,
    pub estimates: Vec<EigenEstimate>,
    pub models: Vec<MlpModel>,
}

/// Spectral estimates from data: with pairs, `nu = 1 - E_tau/Var` and
/// `lambda = (1 - nu)/tau`; without pairs, the gradient (generator) form
/// `lambda = E|grad f|^2 / (beta Var)`. Works for any scalar CV, trained
/// network or oracle interpolant alike.
pub fn eigenvalue_estimate(
    functions: &[&dyn ScalarCv],
    points: &[Point2],
    pairs: Option<&PairDataset>,
    cfg: &EigenLossConfig,
) -> Result<Vec<EigenEstimate>> {
    let mut out = Vec::with_capacity(functions.len());
    for (index, f) in functions.iter().enumerate() {
        let (variance, lambda, nu) = match pairs {
            Some(pd) => {
                let fx: Vec<f64> = pd.pairs.iter().map(|p| f.value(p.0)).collect();
                let fy: Vec<f64> = pd.pairs.iter().map(|p| f.value(p.1)).collect();
                let stats = crate::losses::empirical_stats(std::slice::from_ref(&fx))?;
                let variance = stats.variances[0];
                if variance < 10.0 * cfg.var_guard {
                    return Err(Error::DegenerateVariance {
                        var: variance,
                        guard: cfg.var_guard,
                    });
                }
                let energy = 0.5
                    * fx.iter()
                        .zip(&fy)
                        .map(|(a, b)| (b - a) * (b - a))
                        .sum::<f64>()
                    / pd.pairs.len() as f64;
                let nu = 1.0 - energy / variance;
                (variance, (1.0 - nu) / pd.tau, Some(nu))
            }
            None => {
                let vals: Vec<f64> = points.iter().map(|&x| f.value(x)).collect();
                let stats = crate::losses::empirical_stats(&[vals])?;
                let variance = stats.variances[0];
                if variance < 10.0 * cfg.var_guard {
                    return Err(Error::DegenerateVariance {
                        var: variance,
                        guard: cfg.var_guard,
                    });
                }
                let mean_sq_grad = points
                    .iter()
                    .map(|&x| {
                        let g = f.gradient(x);
                        g[0] * g[0] + g[1] * g[1]
                    })
                    .sum::<f64>()
                    / points.len() as f64;
                (variance, mean_sq_grad / (cfg.beta * variance), None)
            }
        };
        out.push(EigenEstimate {
            index,
            nu,
            lambda,
            variance,
        });
    }
    Ok(out)
}

/// Export model outputs on a regular grid: rows `x1,x2,v...`.
pub fn export_grid(
    path: &Path,
    eval: impl Fn(Point2) -> Vec<f64>,
    bounds: [[f64; 2]; 2],
    resolution: [usize; 2],
) -> Result<()> {
    let (n1, n2) = (resolution[0], resolution[1]);
    assert!(n1 >= 2 && n2 >= 2);
    let probe = eval([bounds[0][0], bounds[1][0]]);
    let header = match probe.len() {
        1 => "x1,x2,v".to_string(),
        k => {
            let cols: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
            format!("x1,x2,{}", cols.join(","))
        }
    };
    let eval = &eval;
    let rows = (0..n1).flat_map(move |i| {
        (0..n2).map(move |j| {
            let x = [
                bounds[0][0] + i as f64 * (bounds[0][1] - bounds[0][0]) / (n1 - 1) as f64,
                bounds[1][0] + j as f64 * (bounds[1][1] - bounds[1][0]) / (n2 - 1) as f64,
            ];
            let mut row = vec![x[0], x[1]];
            row.extend(eval(x));
            row
        })
    });
    io::write_csv(path, &header, rows)
}

/// Export the decoder image: 256 latent values spanning the 1st..99th
/// percentile of `enc` over the data, rows `z,y1,y2`.
pub fn export_decoder_curve(
    path: &Path,
    enc: &MlpModel,
    dec: &MlpModel,
    points: &[Point2],
) -> Result<()> {
    let mut zs = feature_values(enc, points);
    zs.sort_by(f64::total_cmp);
    let q = |f: f64| zs[((zs.len() - 1) as f64 * f).round() as usize];
    let (lo, hi) = (q(0.01), q(0.99));
    let rows = (0..256).map(|k| {
        let z = lo + (hi - lo) * k as f64 / 255.0;
        let y = dec.forward(&[z]);
        vec![z, y[0], y[1]]
    });
    io::write_csv(path, "z,y1,y2", rows)
}

/// Deterministic Fisher-Yates permutation of `0..n`.
fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    idx
}

fn sample_dataset(config: &ExperimentConfig) -> Result<(Dataset, DatasetMeta)> {
    let s = &config.sampling;
    let x0 = s.x0.unwrap_or_else(|| config.potential.default_start());
    let traj = simulate(
        config.potential,
        Thermo::new(config.beta),
        x0,
        s.dt,
        s.n_steps,
        s.seed,
    )?;
    let data = subsample(&traj, s.stride);
    let meta = DatasetMeta {
        dt: s.dt,
        stride: s.stride,
        seed: s.seed,
        potential: config.potential,
        beta: config.beta,
    };
    Ok((data, meta))
}

fn eigen_loss_config(config: &ExperimentConfig) -> EigenLossConfig {
    let tr = config.training.as_ref().expect("validated");
    EigenLossConfig {
        k: tr.k,
        omegas: tr.omegas.clone(),
        alpha: tr.alpha,
        beta: config.beta,
        tau: tr.tau.unwrap_or(0.0),
        var_guard: tr.var_guard,
    }
}

struct TrainedBundle {
    models: Vec<MlpModel>,
    metrics: Vec<EpochMetrics>,
}

fn train_autoencoder(
    config: &ExperimentConfig,
    data: &Dataset,
    pairs: Option<&PairDataset>,
    log: &mut String,
) -> Result<TrainedBundle> {
    let tr = config.training.as_ref().expect("validated");
    let arch = config.architecture.as_ref().expect("validated");
    let mut rng = ChaCha8Rng::seed_from_u64(tr.seed);
    let mut enc = MlpModel::init_with_rng(
        MlpSpec::new(arch.encoder.clone().expect("validated"))?,
        &mut rng,
    );
    let mut dec = MlpModel::init_with_rng(
        MlpSpec::new(arch.decoder.clone().expect("validated"))?,
        &mut rng,
    );
    let mut enc_opt = AdamState::new(enc.spec.param_count(), AdamParams::with_lr(tr.lr));
    let mut dec_opt = AdamState::new(dec.spec.param_count(), AdamParams::with_lr(tr.lr));
    let n = pairs.map_or(data.points.len(), |p| p.pairs.len());
    let mut metrics = Vec::with_capacity(tr.epochs);
    for epoch in 0..tr.epochs {
        let order = shuffled_indices(n, tr.seed.wrapping_add(epoch as u64));
        let mut epoch_loss = 0.0;
        let mut n_batches = 0;
        for chunk in order.chunks(tr.batch_size) {
            let (loss, ge, gd) = match pairs {
                Some(pd) => {
                    let batch: Vec<(Point2, Point2)> =
                        chunk.iter().map(|&i| pd.pairs[i]).collect();
                    tlae_loss_grad(&enc, &dec, &batch)?
                }
                None => {
                    let batch: Vec<Point2> = chunk.iter().map(|&i| data.points[i]).collect();
                    ae_loss_grad(&enc, &dec, &batch)?
                }
            };
            enc_opt.step(&mut enc.params, &ge);
            dec_opt.step(&mut dec.params, &gd);
            epoch_loss += loss;
            n_batches += 1;
        }
        let loss = epoch_loss / n_batches as f64;
        metrics.push(EpochMetrics {
            epoch,
            loss,
            rayleigh: loss,
            penalty: 0.0,
        });
        if epoch % 100 == 0 || epoch + 1 == tr.epochs {
            log.push_str(&format!("epoch {epoch}: loss {loss:.6}\n"));
        }
    }
    Ok(TrainedBundle {
        models: vec![enc, dec],
        metrics,
    })
}

fn train_eigenfunctions(
    config: &ExperimentConfig,
    data: &Dataset,
    pairs: Option<&PairDataset>,
    log: &mut String,
) -> Result<TrainedBundle> {
    let tr = config.training.as_ref().expect("validated");
    let arch = config.architecture.as_ref().expect("validated");
    let spec = MlpSpec::new(arch.eigen.clone().expect("validated"))?;
    let cfg = eigen_loss_config(config);
    let mut rng = ChaCha8Rng::seed_from_u64(tr.seed);
    let mut models: Vec<MlpModel> = (0..tr.k)
        .map(|_| MlpModel::init_with_rng(spec.clone(), &mut rng))
        .collect();
    let mut opts: Vec<AdamState> = models
        .iter()
        .map(|m| AdamState::new(m.spec.param_count(), AdamParams::with_lr(tr.lr)))
        .collect();
    let n = pairs.map_or(data.points.len(), |p| p.pairs.len());
    let mut metrics = Vec::with_capacity(tr.epochs);
    for epoch in 0..tr.epochs {
        let order = shuffled_indices(n, tr.seed.wrapping_add(epoch as u64));
        let (mut el, mut er, mut ep) = (0.0, 0.0, 0.0);
        let mut n_batches = 0;
        for chunk in order.chunks(tr.batch_size) {
            let (parts, grads) = match pairs {
                Some(pd) => {
                    let batch: Vec<(Point2, Point2)> =
                        chunk.iter().map(|&i| pd.pairs[i]).collect();
                    // Variance/covariance statistics on the x-marginal of
                    // the batch.
                    eigen_transfer_train_step(&models, &batch, &cfg)?
                }
                None => {
                    let batch: Vec<Point2> = chunk.iter().map(|&i| data.points[i]).collect();
                    eigen_generator_loss_grad(&models, &batch, &cfg)?
                }
            };
            for (model, (opt, grad)) in models.iter_mut().zip(opts.iter_mut().zip(&grads)) {
                opt.step(&mut model.params, grad);
            }
            el += parts.total;
            er += parts.rayleigh;
            ep += parts.penalty;
            n_batches += 1;
        }
        let nb = n_batches as f64;
        metrics.push(EpochMetrics {
            epoch,
            loss: el / nb,
            rayleigh: er / nb,
            penalty: ep / nb,
        });
        if epoch % 100 == 0 || epoch + 1 == tr.epochs {
            log.push_str(&format!(
                "epoch {epoch}: loss {:.6} (rayleigh {:.6}, penalty {:.6})\n",
                el / nb,
                er / nb,
                ep / nb
            ));
        }
    }
    Ok(TrainedBundle { models, metrics })
}

/// Run the configured pipeline, writing artifacts into the output
/// directory (`--out` override, then `config.output`, else `./run`).
pub fn run(config: &ExperimentConfig, out: Option<&Path>, quiet: bool) -> Result<RunSummary> {
    config.validate()?;
    let out_dir: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("run"));
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("config.json"), config.to_json_pretty())?;
    let t0 = Instant::now();
    let mut log = String::new();

    let summary = match config.task {
        Task::Mep => run_mep(config, &out_dir, &mut log)?,
        _ => {
            let (data, meta) = sample_dataset(config)?;
            io::write_dataset(&out_dir, &data, &meta)?;
            log.push_str(&format!("dataset: {} states\n", data.points.len()));
            match config.task {
                Task::OracleReport => run_oracle_report(config, &data, &out_dir, &mut log)?,
                Task::Evaluate => run_evaluate(config, &data, &out_dir, &mut log)?,
                task if task.is_training() => run_training(config, &data, &out_dir, &mut log)?,
                _ => unreachable!(),
            }
        }
    };
    log.push_str(&format!("total wall time: {:.2?}\n", t0.elapsed()));
    fs::write(out_dir.join("run.log"), &log)?;
    if !quiet {
        print!("{log}");
    }
    Ok(summary)
}

fn run_training(
    config: &ExperimentConfig,
    data: &Dataset,
    out_dir: &Path,
    log: &mut String,
) -> Result<RunSummary> {
    let pairs = if config.task.needs_pairs() {
        Some(lagged_pairs(data, config.lag_steps()?)?)
    } else {
        None
    };
    let bundle = match config.task {
        Task::TrainAe | Task::TrainTlae => {
            train_autoencoder(config, data, pairs.as_ref(), log)?
        }
        _ => train_eigenfunctions(config, data, pairs.as_ref(), log)?,
    };
    io::write_metrics(&out_dir.join("metrics.json"), &bundle.metrics)?;
    let domain = config.potential.default_domain();
    let mut estimates = Vec::new();
    match config.task {
        Task::TrainAe | Task::TrainTlae => {
            let (enc, dec) = (&bundle.models[0], &bundle.models[1]);
            io::save_model(&out_dir.join("model_encoder.json"), enc)?;
            io::save_model(&out_dir.join("model_decoder.json"), dec)?;
            export_grid(
                &out_dir.join("grid_encoder.csv"),
                |x| enc.forward(&x),
                domain,
                [101, 101],
            )?;
            export_decoder_curve(&out_dir.join("decoder_curve.csv"), enc, dec, &data.points)?;
        }
        _ => {
            let cfg = eigen_loss_config(config);
            let fns: Vec<&dyn ScalarCv> =
                bundle.models.iter().map(|m| m as &dyn ScalarCv).collect();
            estimates = eigenvalue_estimate(&fns, &data.points, pairs.as_ref(), &cfg)?;
            for (i, m) in bundle.models.iter().enumerate() {
                io::save_model(&out_dir.join(format!("model_f{}.json", i + 1)), m)?;
                let mi = m.clone();
                export_grid(
                    &out_dir.join(format!("grid_f{}.csv", i + 1)),
                    move |x| mi.forward(&x),
                    domain,
                    [101, 101],
                )?;
            }
            fs::write(
                out_dir.join("eigen_estimates.json"),
                serde_json::to_string_pretty(&estimates)?,
            )?;
            for e in &estimates {
                log.push_str(&format!(
                    "f{}: lambda = {:.6}, nu = {:?}, variance = {:.6}\n",
                    e.index + 1,
                    e.lambda,
                    e.nu,
                    e.variance
                ));
            }
        }
    }
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        metrics: bundle.metrics,
        estimates,
        models: bundle.models,
    })
}

#[derive(Serialize)]
struct OracleReport {
    domain: [[f64; 2]; 2],
    resolution: [usize; 2],
    eigenvalues: Vec<f64>,
    order: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution_check_lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ulam: Option<UlamReport>,
}

#[derive(Serialize)]
struct UlamReport {
    bins: [usize; 2],
    tau: f64,
    n_states: usize,
    dropped_bins: usize,
    eigenvalues: Vec<f64>,
    /// `|nu_1 - exp(-tau lambda_1)|`, the semigroup consistency bridge.
    bridge_gap: f64,
}

fn run_oracle_report(
    config: &ExperimentConfig,
    data: &Dataset,
    out_dir: &Path,
    log: &mut String,
) -> Result<RunSummary> {
    let o = config.oracle.clone().unwrap_or(crate::config::OracleConfig {
        grid: None,
        n_eigs: None,
        ulam_bins: None,
        tau: None,
        check_resolution: false,
    });
    let res = o.grid.unwrap_or([161, 161]);
    let m = o.n_eigs.unwrap_or(5);
    let grid = Grid2D::default_for(config.potential, Thermo::new(config.beta), res[0], res[1]);
    let op = fd_generator(&grid);
    let eig = op.leading_eigs(m)?;
    log.push_str(&format!("grid eigenvalues: {:?}\n", eig.eigenvalues));

    let header: Vec<String> = (0..m).map(|i| format!("phi{i}")).collect();
    io::write_csv(
        &out_dir.join("eigen_grid.csv"),
        &format!("x1,x2,{}", header.join(",")),
        (0..grid.n1).flat_map(|i| {
            let eigf = &eig.functions;
            let grid = &grid;
            (0..grid.n2).map(move |j| {
                let x = grid.node(i, j);
                let mut row = vec![x[0], x[1]];
                row.extend(eigf.iter().map(|f| f[grid.idx(i, j)]));
                row
            })
        }),
    )?;

    let resolution_check_lambda1 = if o.check_resolution {
        Some(crate::oracle::check_grid_resolution(&grid)?)
    } else {
        None
    };

    let ulam = if let Some(bins) = o.ulam_bins {
        let tau = o.tau.expect("validated");
        let edt = data.effective_dt;
        let j = (tau / edt).round() as usize;
        let pairs = lagged_pairs(data, j)?;
        let spec = BinSpec::new(config.potential.default_domain(), bins[0], bins[1]);
        let model = ulam_transfer(&pairs.pairs, &spec)?;
        let spectrum = ulam_spectrum(&model, m.min(model.n_states()))?;
        let bridge_gap = (spectrum.eigenvalues[1] - (-tau * eig.eigenvalues[1]).exp()).abs();
        log.push_str(&format!(
            "ulam eigenvalues: {:?} (bridge gap {bridge_gap:.4})\n",
            spectrum.eigenvalues
        ));
        let fheader: Vec<String> = (0..spectrum.functions.len()).map(|i| format!("phi{i}")).collect();
        io::write_csv(
            &out_dir.join("ulam.csv"),
            &format!("x1,x2,pi,{}", fheader.join(",")),
            (0..model.n_states()).map(|s| {
                let c = model.state_center(s).unwrap_or([f64::NAN, f64::NAN]);
                let mut row = vec![c[0], c[1], model.pi[s]];
                row.extend(spectrum.functions.iter().map(|f| f[s]));
                row
            }),
        )?;
        Some(UlamReport {
            bins,
            tau,
            n_states: model.n_states(),
            dropped_bins: model.dropped_bins,
            eigenvalues: spectrum.eigenvalues,
            bridge_gap,
        })
    } else {
        None
    };

    let report = OracleReport {
        domain: grid.bounds,
        resolution: res,
        eigenvalues: eig.eigenvalues.clone(),
        order: "ascending",
        resolution_check_lambda1,
        ulam,
    };
    fs::write(
        out_dir.join("oracle_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        metrics: Vec::new(),
        estimates: Vec::new(),
        models: Vec::new(),
    })
}

fn run_mep(config: &ExperimentConfig, out_dir: &Path, log: &mut String) -> Result<RunSummary> {
    let m = config.mep.as_ref().expect("validated");
    let params = mep::StringParams {
        n_nodes: m.n_nodes,
        step: m.step,
        max_iters: m.max_iters,
        tol: m.tol,
    };
    let path = mep::string_method(&config.potential, m.a, m.b, &params);
    io::write_path_csv(&out_dir.join("path.csv"), &path.nodes)?;
    #[derive(Serialize)]
    struct MepReport {
        converged: bool,
        iterations: usize,
    }
    fs::write(
        out_dir.join("mep_report.json"),
        serde_json::to_string_pretty(&MepReport {
            converged: path.converged,
            iterations: path.iterations,
        })?,
    )?;
    log.push_str(&format!(
        "string method: converged = {}, iterations = {}\n",
        path.converged, path.iterations
    ));
    if !path.converged {
        return Err(Error::ConvergenceFailure(
            "string method did not converge within max_iters".into(),
        ));
    }
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        metrics: Vec::new(),
        estimates: Vec::new(),
        models: Vec::new(),
    })
}

fn run_evaluate(
    config: &ExperimentConfig,
    data: &Dataset,
    out_dir: &Path,
    log: &mut String,
) -> Result<RunSummary> {
    let e = config.evaluate.as_ref().expect("validated");
    let domain = config.potential.default_domain();
    let pairs = match e.tau {
        Some(tau) => {
            let j = (tau / data.effective_dt).round() as usize;
            Some(lagged_pairs(data, j)?)
        }
        None => None,
    };
    let mut models = Vec::new();
    let mut estimates = Vec::new();
    if let (Some(enc_path), Some(dec_path)) = (&e.encoder, &e.decoder) {
        let enc = io::load_model(Path::new(enc_path))?;
        let dec = io::load_model(Path::new(dec_path))?;
        export_grid(
            &out_dir.join("grid_encoder.csv"),
            |x| enc.forward(&x),
            domain,
            [101, 101],
        )?;
        export_decoder_curve(&out_dir.join("decoder_curve.csv"), &enc, &dec, &data.points)?;
        if let Some(pd) = &pairs {
            let moments = conditional_moments(&pd.pairs, &enc, e.moment_bins)?;
            io::write_csv(
                &out_dir.join("conditional_moments.csv"),
                "z,mean_y1,mean_y2,var_y,count",
                moments.iter().map(|m| {
                    vec![
                        m.z_center,
                        m.mean_y[0],
                        m.mean_y[1],
                        m.var_y,
                        m.count as f64,
                    ]
                }),
            )?;
            log.push_str(&format!("conditional moments over {} bins\n", e.moment_bins));
        }
        models.push(enc);
        models.push(dec);
    }
    if !e.eigenfunctions.is_empty() {
        let mut fs_models = Vec::new();
        for p in &e.eigenfunctions {
            fs_models.push(io::load_model(Path::new(p))?);
        }
        for (i, m) in fs_models.iter().enumerate() {
            let mi = m.clone();
            export_grid(
                &out_dir.join(format!("grid_f{}.csv", i + 1)),
                move |x| mi.forward(&x),
                domain,
                [101, 101],
            )?;
        }
        let cfg = EigenLossConfig {
            k: fs_models.len(),
            omegas: vec![1.0; fs_models.len()],
            alpha: 0.0,
            beta: config.beta,
            tau: e.tau.unwrap_or(0.0),
            var_guard: 1e-6,
        };
        let fns: Vec<&dyn ScalarCv> = fs_models.iter().map(|m| m as &dyn ScalarCv).collect();
        estimates = eigenvalue_estimate(&fns, &data.points, pairs.as_ref(), &cfg)?;
        fs::write(
            out_dir.join("eigen_estimates.json"),
            serde_json::to_string_pretty(&estimates)?,
        )?;
        models.extend(fs_models);
    }
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        metrics: Vec::new(),
        estimates,
        models,
    })
}

/// Sample a trajectory and export only the dataset (the `simulate` CLI
/// verb).
pub fn simulate_only(config: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    config.validate()?;
    let out_dir: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("run"));
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("config.json"), config.to_json_pretty())?;
    let (data, meta) = sample_dataset(config)?;
    io::write_dataset(&out_dir, &data, &meta)?;
    Ok(out_dir)
}
