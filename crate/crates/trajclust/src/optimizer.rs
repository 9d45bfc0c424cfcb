//! RMSProp training loop for the autoencoder.
//!
//! Plain RMSProp: each parameter keeps a running mean of its squared
//! gradients and is updated by the gradient scaled by the inverse root of
//! that mean. No momentum term. Mini-batches are drawn by a seeded shuffle
//! each epoch, so a (dataset, config) pair fully determines the run.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    backward, backward_any_order, ArchConfig, AutoencoderModel, GradientSet,
};
use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::math::rng::RngStream;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Decay of the squared-gradient running mean.
    pub rho: f64,
    /// Stabilizer added to the root of the running mean.
    pub epsilon: f64,
    pub epochs: usize,
    /// Sequences per mini-batch; 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
    /// When set, per-sequence gradients reduce in a fixed order, making the
    /// run bit-reproducible. When unset, the reduction order is unspecified.
    pub deterministic: bool,
    /// Rescale gradients whose L2 norm exceeds this bound. Off by default.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            rho: 0.9,
            epsilon: 1e-8,
            epochs: 500,
            batch_size: 32,
            seed: 0,
            deterministic: true,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!("rho {} outside [0, 1)", self.rho)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::InvalidConfig(format!("clip norm {c} must be positive")));
            }
        }
        Ok(())
    }
}

/// Running mean of squared gradients, one flat tensor per parameter tensor,
/// plus the number of steps taken.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub accumulators: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn zeros_like(model: &AutoencoderModel) -> Self {
        OptimizerState {
            accumulators: model.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
            step: 0,
        }
    }
}

/// One RMSProp update: v <- rho v + (1 - rho) g^2, p <- p - lr g / (sqrt(v) + eps).
///
/// Inputs are left untouched; the updated parameters and accumulators are
/// returned as new values.
pub fn rmsprop_step(
    model: &AutoencoderModel,
    grads: &GradientSet,
    state: &OptimizerState,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, OptimizerState)> {
    config.validate()?;
    let shapes_match = {
        let p = model.tensors();
        let g = grads.tensors();
        p.len() == g.len()
            && p.len() == state.accumulators.len()
            && p.iter()
                .zip(&g)
                .zip(&state.accumulators)
                .all(|((p, g), v)| p.len() == g.len() && p.len() == v.len())
    };
    if !shapes_match {
        return Err(Error::ShapeMismatch(
            "parameters, gradients, and accumulators do not share shapes".into(),
        ));
    }

    let mut new_model = model.clone();
    let mut new_state = state.clone();
    for ((params, grad), acc) in new_model
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(&mut new_state.accumulators)
    {
        for ((p, &g), v) in params.iter_mut().zip(grad).zip(acc.iter_mut()) {
            *v = config.rho * *v + (1.0 - config.rho) * g * g;
            *p -= config.learning_rate * g / (v.sqrt() + config.epsilon);
        }
    }
    new_state.step += 1;
    Ok((new_model, new_state))
}

/// Train an autoencoder on a dataset.
///
/// The dataset is normalized to zero mean and unit standard deviation (the
/// statistics travel with the returned model). The model is initialized from
/// the config seed, then for each epoch the subject order is reshuffled with
/// the same seeded stream and consumed in mini-batches, each applying one
/// gradient computation and one [`rmsprop_step`]. The history holds the mean
/// of the batch losses of each epoch, evaluated before that batch's update.
pub fn train(
    dataset: &TrajectoryDataset,
    arch: &ArchConfig,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, Vec<f64>)> {
    config.validate()?;
    let n = dataset.n_subjects();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }

    let stats = dataset.norm_stats();
    let normalized = dataset.normalized_with(stats);
    let rows = normalized.values();

    let mut rng = RngStream::new(config.seed);
    let mut model = AutoencoderModel::init(arch, dataset.seq_len(), stats, &mut rng)?;
    let mut state = OptimizerState::zeros_like(&model);

    let batch_size = if config.batch_size == 0 || config.batch_size > n {
        n
    } else {
        config.batch_size
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| rows[i].as_slice()).collect();
            let (loss, mut grads) = if config.deterministic {
                backward(&model, &batch)?
            } else {
                backward_any_order(&model, &batch)?
            };
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: n_batches, loss });
            }
            if let Some(bound) = config.clip_norm {
                let norm = grads.l2_norm();
                if norm > bound {
                    grads.scale(bound / norm);
                }
            }
            let (next_model, next_state) = rmsprop_step(&model, &grads, &state, config)?;
            model = next_model;
            state = next_state;
            epoch_loss += loss;
            n_batches += 1;
        }
        history.push(epoch_loss / n_batches as f64);
    }
    Ok((model, history))
}
