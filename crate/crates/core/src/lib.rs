//! Weakly supervised audio tagging with a convolutional gated recurrent
//! network, a frame attention gate and per-event localization.
//!
//! Modules, bottom up: [`numerics`] (matrices, activations, RNG),
//! [`features`] (log-mel front end), [`model`] (forward graph), [`train`]
//! (loss, gradients, Adam, gradient check, epoch loop), [`data`] (WAV,
//! manifests, synthetic scenes), [`metrics`] (EER, localization AUC) and
//! [`cli`] (command implementations and checkpoints).

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod train;

pub use error::{Error, Result};
