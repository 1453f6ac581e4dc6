//! Robust unsupervised clustering for high-dimensional noisy data.
//!
//! The core method jointly learns a discriminative projection `W`, cluster
//! centers `F`, a relaxed indicator `G` and an adaptive similarity graph `S`
//! by alternating minimization of an l2,1-norm ratio objective with a
//! graph-smoothness and entropy regularizer. Around it sit the pieces needed
//! to run experiments end to end: scatter-matrix oracles, a Stiefel-manifold
//! quadratic solver, clustering metrics, k-means/PCA baselines, dataset
//! loading, synthetic generation and noise-injection utilities.

pub mod baselines;
pub mod data;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod qpsm;
pub mod scatter;

pub use error::{Error, Result};
pub use matrix::{Axis, Matrix};
