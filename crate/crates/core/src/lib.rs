//! Missing-data imputation around a trained autoencoder.
//!
//! A stacked (optionally denoising) autoencoder is trained on complete,
//! normalized records; missing entries of incomplete records are then filled
//! by minimizing the network's reconstruction error over the missing
//! coordinates with known values clamped. A genetic algorithm, particle swarm
//! optimization, or projected gradient descent performs the search. The crate
//! also ships MCAR/MAR/MNAR missingness simulators with arbitrary and
//! monotone patterns, evaluation metrics, and mean / kNN baselines.

pub mod data;
pub mod error;
pub mod eval;
pub mod impute;
pub mod missingness;
pub mod model;
pub mod net;
pub mod optimize;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
