//! Simulated two-group quality-of-life benchmark.
//!
//! Group A follows a sine with a random per-subject phase, group B is flat;
//! both carry i.i.d. Gaussian noise. Every subject draws from its own child
//! RNG stream, so the dataset is reproducible regardless of generation
//! order.

use serde::{Deserialize, Serialize};

use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::math::rng::RngStream;

/// Generator settings. Defaults give 100 sine and 100 flat subjects over 20
/// quarter-unit timesteps, amplitude 5 around baseline 10, phase U(-2, 2)
/// radians, noise N(0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub t_len: usize,
    pub dt: f64,
    pub amplitude: f64,
    pub baseline: f64,
    /// Angular factor multiplying t inside the sine.
    pub angular: f64,
    /// Phase is drawn uniformly from [-phase_range, phase_range].
    pub phase_range: f64,
    pub sigma: f64,
    pub with_noise: bool,
    pub with_phase: bool,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_a: 100,
            n_b: 100,
            t_len: 20,
            dt: 0.25,
            amplitude: 5.0,
            baseline: 10.0,
            angular: std::f64::consts::FRAC_PI_2,
            phase_range: 2.0,
            sigma: 1.0,
            with_noise: true,
            with_phase: true,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_a + self.n_b == 0 {
            return Err(Error::EmptyConfig);
        }
        if self.t_len < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 timesteps, got {}",
                self.t_len
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("sigma {} must be >= 0", self.sigma)));
        }
        if !(self.phase_range >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "phase range {} must be >= 0",
                self.phase_range
            )));
        }
        Ok(())
    }
}

/// Generate the benchmark dataset. Group A subject i emits
/// amplitude * sin(angular * t_j + phi_i) + baseline + eps at t_j = j * dt
/// with one phase phi_i ~ U(-range, range) per subject; group B emits
/// baseline + eps. Labels "A"/"B" travel with the dataset.
pub fn simulate_qol(config: &SimulationConfig) -> Result<TrajectoryDataset> {
    config.validate()?;
    let total = config.n_a + config.n_b;

    let mut ids = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut rows = Vec::with_capacity(total);
    for subject in 0..total {
        let is_a = subject < config.n_a;
        let mut rng = RngStream::child(config.seed, subject as u64);
        let phase = if is_a && config.with_phase {
            rng.uniform(-config.phase_range, config.phase_range)
        } else {
            0.0
        };
        let row: Vec<f64> = (0..config.t_len)
            .map(|j| {
                let t = j as f64 * config.dt;
                let shape = if is_a {
                    config.amplitude * (config.angular * t + phase).sin()
                } else {
                    0.0
                };
                let noise = if config.with_noise { config.sigma * rng.normal() } else { 0.0 };
                config.baseline + shape + noise
            })
            .collect();
        rows.push(row);
        if is_a {
            ids.push(format!("a{subject}"));
            labels.push("A".to_string());
        } else {
            ids.push(format!("b{}", subject - config.n_a));
            labels.push("B".to_string());
        }
    }
    TrajectoryDataset::new(ids, rows, Some(labels))
}
