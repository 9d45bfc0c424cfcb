//! Clustering of longitudinal data through a recurrent autoencoder.
//!
//! The pipeline embeds each subject's measurement trajectory with an LSTM
//! autoencoder trained to reconstruct its input through a low-dimensional
//! bottleneck, then clusters the embeddings with conventional algorithms.
//! Classical baselines (longitudinal K-means over several trajectory
//! distances, agglomerative linkage, and an EM mixture of polynomial
//! trajectories) and evaluation utilities (Calinski-Harabasz, adjusted Rand
//! index, soft memberships, cross-method agreement) round out the toolkit,
//! together with a simulator for the two-group quality-of-life benchmark.
//!
//! Everything is seeded and deterministic: a fixed seed reproduces the same
//! bytes in every artifact, with or without the `parallel` feature.

// Indexed loops here walk several arrays in lockstep, and negated float
// comparisons are the NaN-rejecting form on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod autoencoder;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod math;
pub mod optimizer;
mod parallel;
pub mod simulation;

pub use dataset::{NormStats, TrajectoryDataset};
pub use error::{Error, Result};
