//! Experiment configuration: one JSON document per run.
//!
//! Unknown keys are rejected and everything is validated up front, so a
//! run either starts with a fully checked configuration or not at all.

use serde::{Deserialize, Serialize};

use crate::potentials::Potential;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    TrainAe,
    TrainTlae,
    TrainEigenTransfer,
    TrainEigenGenerator,
    OracleReport,
    Mep,
    Evaluate,
}

impl Task {
    pub fn is_training(self) -> bool {
        matches!(
            self,
            Task::TrainAe | Task::TrainTlae | Task::TrainEigenTransfer | Task::TrainEigenGenerator
        )
    }

    pub fn needs_pairs(self) -> bool {
        matches!(self, Task::TrainTlae | Task::TrainEigenTransfer)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub stride: usize,
    pub seed: u64,
    /// Defaults to a well minimum of the potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder: Option<Vec<usize>>,
    /// Layer sizes shared by the k eigenfunction networks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen: Option<Vec<usize>>,
}

fn default_k() -> usize {
    1
}

fn default_omegas() -> Vec<f64> {
    vec![1.0]
}

fn default_var_guard() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_omegas")]
    pub omegas: Vec<f64>,
    /// Lag time; converted to a step count against the dataset's
    /// effective time step. Exactly one of `tau`/`lag_steps` may be
    /// given for lagged tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_steps: Option<usize>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_var_guard")]
    pub var_guard: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Grid resolution for the generator discretization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    /// Number of eigenpairs to report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eigs: Option<usize>,
    /// Ulam bin counts; the Ulam estimate runs only when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ulam_bins: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Run the coarse-vs-fine resolution heuristic.
    #[serde(default)]
    pub check_resolution: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MepConfig {
    pub a: [f64; 2],
    pub b: [f64; 2],
    #[serde(default = "default_mep_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_mep_step")]
    pub step: f64,
    #[serde(default = "default_mep_iters")]
    pub max_iters: usize,
    #[serde(default = "default_mep_tol")]
    pub tol: f64,
}

fn default_mep_nodes() -> usize {
    50
}

fn default_mep_step() -> f64 {
    1e-3
}

fn default_mep_iters() -> usize {
    50_000
}

fn default_mep_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Checkpoints to evaluate: either an encoder/decoder pair or
    /// eigenfunction models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigenfunctions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_moment_bins")]
    pub moment_bins: usize,
}

fn default_moment_bins() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: Potential,
    pub beta: f64,
    pub sampling: SamplingConfig,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<ArchitectureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mep: Option<MepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateConfig>,
    /// Output directory; may be overridden by `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn err(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn check_arch(name: &str, sizes: &[usize], input: usize, output: Option<usize>) -> Result<()> {
    if sizes.len() < 2 {
        return Err(err(format!("{name}: need at least two layers")));
    }
    if sizes.contains(&0) {
        return Err(err(format!("{name}: layer sizes must be positive")));
    }
    if sizes[0] != input {
        return Err(err(format!("{name}: input layer must have size {input}")));
    }
    if let Some(out) = output {
        if *sizes.last().unwrap() != out {
            return Err(err(format!("{name}: output layer must have size {out}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Effective time between recorded states.
    pub fn effective_dt(&self) -> f64 {
        self.sampling.dt * self.sampling.stride as f64
    }

    /// Lag in dataset steps for lagged tasks (from `lag_steps` or `tau`).
    pub fn lag_steps(&self) -> Result<usize> {
        let tr = self
            .training
            .as_ref()
            .ok_or_else(|| err("lagged task needs a training section"))?;
        match (tr.lag_steps, tr.tau) {
            (Some(j), None) => Ok(j),
            (None, Some(tau)) => {
                let edt = self.effective_dt();
                let j = (tau / edt).round();
                if j < 0.0 || (tau - j * edt).abs() > 1e-9 * edt.max(tau) {
                    return Err(err(format!(
                        "tau {tau} is not a multiple of the effective time step {edt}"
                    )));
                }
                Ok(j as usize)
            }
            (Some(_), Some(_)) => Err(err("give either tau or lag_steps, not both")),
            (None, None) => Err(err("lagged task needs tau or lag_steps")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Potential::Example1 { epsilon } = self.potential {
            if epsilon.is_nan() || epsilon <= 0.0 {
                return Err(err("epsilon must be positive"));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(err("beta must be positive and finite"));
        }
        let s = &self.sampling;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(err("sampling.dt must be positive and finite"));
        }
        if s.n_steps == 0 {
            return Err(err("sampling.n_steps must be at least 1"));
        }
        if s.stride == 0 || s.stride > s.n_steps {
            return Err(err("sampling.stride must be in 1..=n_steps"));
        }
        if let Some(x0) = s.x0 {
            if !x0[0].is_finite() || !x0[1].is_finite() {
                return Err(err("sampling.x0 must be finite"));
            }
        }

        if self.task.is_training() {
            let tr = self
                .training
                .as_ref()
                .ok_or_else(|| err("training task needs a training section"))?;
            if !(tr.lr.is_finite() && tr.lr > 0.0) {
                return Err(err("training.lr must be positive"));
            }
            if tr.batch_size == 0 {
                return Err(err("training.batch_size must be at least 1"));
            }
            if tr.epochs == 0 {
                return Err(err("training.epochs must be at least 1"));
            }
            if !(tr.alpha >= 0.0 && tr.alpha.is_finite()) {
                return Err(err("training.alpha must be non-negative"));
            }
            if tr.var_guard.is_nan() || tr.var_guard <= 0.0 {
                return Err(err("training.var_guard must be positive"));
            }
            let arch = self
                .architecture
                .as_ref()
                .ok_or_else(|| err("training task needs an architecture section"))?;
            match self.task {
                Task::TrainAe | Task::TrainTlae => {
                    let enc = arch
                        .encoder
                        .as_ref()
                        .ok_or_else(|| err("autoencoder task needs architecture.encoder"))?;
                    let dec = arch
                        .decoder
                        .as_ref()
                        .ok_or_else(|| err("autoencoder task needs architecture.decoder"))?;
                    check_arch("encoder", enc, 2, None)?;
                    check_arch("decoder", dec, *enc.last().unwrap(), Some(2))?;
                }
                Task::TrainEigenTransfer | Task::TrainEigenGenerator => {
                    let net = arch
                        .eigen
                        .as_ref()
                        .ok_or_else(|| err("eigenfunction task needs architecture.eigen"))?;
                    check_arch("eigen", net, 2, Some(1))?;
                    if tr.k == 0 {
                        return Err(err("training.k must be at least 1"));
                    }
                    if tr.omegas.len() != tr.k {
                        return Err(err(format!(
                            "training.omegas must have k = {} entries",
                            tr.k
                        )));
                    }
                    if tr.omegas.iter().any(|&w| w.is_nan() || w <= 0.0) {
                        return Err(err("training.omegas must be positive"));
                    }
                    if tr.omegas.windows(2).any(|w| w[0] < w[1]) {
                        return Err(err("training.omegas must be non-increasing"));
                    }
                }
                _ => unreachable!(),
            }
            match self.task {
                Task::TrainTlae | Task::TrainEigenTransfer => {
                    let j = self.lag_steps()?;
                    if self.task == Task::TrainEigenTransfer && j == 0 {
                        return Err(err("transfer-operator training needs a positive lag"));
                    }
                    let n_states = self.sampling.n_steps / self.sampling.stride;
                    if j >= n_states {
                        return Err(err(format!(
                            "lag {j} is not smaller than the dataset size {n_states}"
                        )));
                    }
                }
                Task::TrainAe | Task::TrainEigenGenerator => {
                    let tr = self.training.as_ref().unwrap();
                    if tr.tau.is_some() || tr.lag_steps.is_some() {
                        return Err(err("this task does not take tau or lag_steps"));
                    }
                }
                _ => {}
            }
        }
        match self.task {
            Task::Mep => {
                let m = self.mep.as_ref().ok_or_else(|| err("mep task needs a mep section"))?;
                if m.n_nodes < 10 {
                    return Err(err("mep.n_nodes must be at least 10"));
                }
                let positive = |v: f64| v > 0.0 && !v.is_nan();
                if !positive(m.step) || !positive(m.tol) {
                    return Err(err("mep.step and mep.tol must be positive"));
                }
                if m.a.iter().chain(m.b.iter()).any(|v| !v.is_finite()) {
                    return Err(err("mep endpoints must be finite"));
                }
            }
            Task::OracleReport => {
                let o = self.oracle.as_ref().unwrap_or(&DEFAULT_ORACLE);
                if let Some(g) = o.grid {
                    if g[0] < 3 || g[1] < 3 {
                        return Err(err("oracle.grid needs at least 3 nodes per axis"));
                    }
                }
                if let Some(m) = o.n_eigs {
                    if m == 0 || m > 12 {
                        return Err(err("oracle.n_eigs must be in 1..=12"));
                    }
                }
                if let Some(b) = o.ulam_bins {
                    if b[0] == 0 || b[1] == 0 {
                        return Err(err("oracle.ulam_bins must be positive"));
                    }
                    if o.tau.is_none() {
                        return Err(err("oracle.ulam_bins needs oracle.tau"));
                    }
                }
            }
            Task::Evaluate => {
                let e = self
                    .evaluate
                    .as_ref()
                    .ok_or_else(|| err("evaluate task needs an evaluate section"))?;
                let has_ae = e.encoder.is_some() && e.decoder.is_some();
                if e.encoder.is_some() != e.decoder.is_some() {
                    return Err(err("evaluate needs both encoder and decoder, or neither"));
                }
                if !has_ae && e.eigenfunctions.is_empty() {
                    return Err(err("evaluate needs checkpoints to evaluate"));
                }
                if e.moment_bins == 0 {
                    return Err(err("evaluate.moment_bins must be at least 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

static DEFAULT_ORACLE: OracleConfig = OracleConfig {
    grid: None,
    n_eigs: None,
    ulam_bins: None,
    tau: None,
    check_resolution: false,
};

/// Bundled configurations reproducing the reference experiments.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "example1-ae" => example1_base(
            Task::TrainAe,
            ArchitectureConfig {
                encoder: Some(vec![2, 30, 30, 30, 30, 1]),
                decoder: Some(vec![1, 30, 30, 30, 2]),
                eigen: None,
            },
            TrainingConfig {
                lr: 0.005,
                batch_size: 20_000,
                epochs: 500,
                seed: 2046,
                alpha: 0.0,
                omegas: vec![1.0],
                tau: None,
                lag_steps: None,
                k: 1,
                var_guard: 1e-6,
            },
        ),
        "example1-eigen" => example1_base(
            Task::TrainEigenTransfer,
            ArchitectureConfig {
                encoder: None,
                decoder: None,
                eigen: Some(vec![2, 20, 20, 20, 1]),
            },
            TrainingConfig {
                lr: 0.005,
                batch_size: 20_000,
                epochs: 500,
                seed: 2046,
                alpha: 10.0,
                omegas: vec![1.0],
                tau: Some(1.0),
                lag_steps: None,
                k: 1,
                var_guard: 1e-6,
            },
        ),
        "example2-ae" => example2_base(
            Task::TrainAe,
            ArchitectureConfig {
                encoder: Some(vec![2, 30, 30, 30, 30, 1]),
                decoder: Some(vec![1, 30, 30, 30, 2]),
                eigen: None,
            },
            TrainingConfig {
                lr: 0.005,
                batch_size: 100_000,
                epochs: 1000,
                seed: 2046,
                alpha: 0.0,
                omegas: vec![1.0],
                tau: None,
                lag_steps: None,
                k: 1,
                var_guard: 1e-6,
            },
        ),
        "example2-eigen" => example2_base(
            Task::TrainEigenTransfer,
            ArchitectureConfig {
                encoder: None,
                decoder: None,
                eigen: Some(vec![2, 20, 20, 20, 1]),
            },
            TrainingConfig {
                lr: 0.005,
                batch_size: 100_000,
                epochs: 1000,
                seed: 2046,
                alpha: 10.0,
                omegas: vec![1.0],
                tau: Some(0.5),
                lag_steps: None,
                k: 1,
                var_guard: 1e-6,
            },
        ),
        other => {
            return Err(err(format!(
                "unknown preset {other:?}; available: example1-ae, example1-eigen, example2-ae, example2-eigen"
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn example1_base(
    task: Task,
    architecture: ArchitectureConfig,
    training: TrainingConfig,
) -> ExperimentConfig {
    ExperimentConfig {
        potential: Potential::Example1 { epsilon: 0.5 },
        beta: 4.0,
        sampling: SamplingConfig {
            dt: 0.005,
            n_steps: 100_000,
            stride: 2,
            seed: 1,
            x0: None,
        },
        task,
        architecture: Some(architecture),
        training: Some(training),
        oracle: None,
        mep: None,
        evaluate: None,
        output: None,
    }
}

fn example2_base(
    task: Task,
    architecture: ArchitectureConfig,
    training: TrainingConfig,
) -> ExperimentConfig {
    ExperimentConfig {
        potential: Potential::Example2,
        beta: 1.5,
        sampling: SamplingConfig {
            dt: 0.005,
            n_steps: 500_000,
            stride: 2,
            seed: 1,
            x0: None,
        },
        task,
        architecture: Some(architecture),
        training: Some(training),
        oracle: None,
        mep: None,
        evaluate: None,
        output: None,
    }
}
