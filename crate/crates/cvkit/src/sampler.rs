//! Euler-Maruyama trajectory generation and dataset assembly.
//!
//! The update rule is
//! `X_{n+1} = X_n - grad V(X_n) * dt + sqrt(2 * dt / beta) * G_n`
//! with independent standard 2-D Gaussians `G_n`. Draws come from a
//! seeded ChaCha8 stream via Box-Muller so that a `(seed, inputs)` pair
//! always reproduces the same trajectory bit for bit, on any platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::potentials::{Potential, Thermo};
use crate::{Error, Point2, Result};

/// Coordinates past this magnitude abort the integration as diverged.
const DIVERGENCE_GUARD: f64 = 1e6;

/// Raw integrator output: the initial condition plus one state per step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<Point2>,
    pub dt: f64,
    pub potential: Potential,
    pub thermo: Thermo,
    pub seed: u64,
}

/// Subsampled states, ordered in time.
///
/// Recording starts at step `stride` (the initial condition is not
/// recorded), so a run of `n_steps` steps recorded every `stride` steps
/// holds exactly `n_steps / stride` states.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<Point2>,
    pub stride: usize,
    /// Time between consecutive recorded states, `stride * dt`.
    pub effective_dt: f64,
}

/// Time-lagged pairs `(x_i, x_{i+j})` drawn from a [`Dataset`].
#[derive(Debug, Clone)]
pub struct PairDataset {
    pub pairs: Vec<(Point2, Point2)>,
    pub lag_steps: usize,
    /// Physical lag `j * effective_dt`.
    pub tau: f64,
}

/// Sidecar metadata stored next to an exported dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub dt: f64,
    pub stride: usize,
    pub seed: u64,
    pub potential: Potential,
    pub beta: f64,
}

/// Deterministic standard-normal stream: ChaCha8 uniforms fed through
/// Box-Muller, emitting each (cos, sin) pair in order.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next_uniform(&mut self) -> f64 {
        // 53-bit uniform in [0, 1).
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        let u1 = 1.0 - self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Integrate the overdamped Langevin dynamics for `n_steps` steps.
pub fn simulate(
    potential: Potential,
    thermo: Thermo,
    x0: Point2,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    assert!(dt > 0.0, "dt must be positive");
    assert!(n_steps >= 1, "n_steps must be at least 1");
    let noise_scale = (2.0 * dt / thermo.beta).sqrt();
    let mut gauss = GaussianStream::new(seed);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x0);
    let mut x = x0;
    for step in 1..=n_steps {
        let g = potential.gradient(x);
        // Per-step draw order: first coordinate, then second.
        let g1 = gauss.next_gaussian();
        let g2 = gauss.next_gaussian();
        x = [
            x[0] - g[0] * dt + noise_scale * g1,
            x[1] - g[1] * dt + noise_scale * g2,
        ];
        if !x[0].is_finite()
            || !x[1].is_finite()
            || x[0].abs() > DIVERGENCE_GUARD
            || x[1].abs() > DIVERGENCE_GUARD
        {
            return Err(Error::Diverged {
                step,
                threshold: DIVERGENCE_GUARD,
            });
        }
        states.push(x);
    }
    Ok(Trajectory {
        states,
        dt,
        potential,
        thermo,
        seed,
    })
}

/// Record every `stride`-th state, starting at step `stride`.
pub fn subsample(traj: &Trajectory, stride: usize) -> Dataset {
    assert!(stride >= 1, "stride must be at least 1");
    let points = traj
        .states
        .iter()
        .skip(stride)
        .step_by(stride)
        .copied()
        .collect();
    Dataset {
        points,
        stride,
        effective_dt: stride as f64 * traj.dt,
    }
}

/// Assemble the `N - j` ordered pairs `(points[i], points[i+j])`.
pub fn lagged_pairs(data: &Dataset, lag_steps: usize) -> Result<PairDataset> {
    let n = data.points.len();
    if lag_steps >= n {
        return Err(Error::LagTooLarge {
            lag: lag_steps,
            len: n,
        });
    }
    let pairs = (0..n - lag_steps)
        .map(|i| (data.points[i], data.points[i + lag_steps]))
        .collect();
    Ok(PairDataset {
        pairs,
        lag_steps,
        tau: lag_steps as f64 * data.effective_dt,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn from_points(points: Vec<Point2>, effective_dt: f64) -> Self {
        Dataset {
            points,
            stride: 1,
            effective_dt,
        }
    }
}
