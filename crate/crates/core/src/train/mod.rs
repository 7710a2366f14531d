//! Loss, exact gradients, Adam, finite-difference checking and the epoch loop.

mod adam;
mod backward;
mod gradcheck;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, backward_from_trace, Gradients};
pub use gradcheck::{grad_check, grad_check_against, relative_error, GradCheckReport, TensorCheck, DEFAULT_EPS, DEFAULT_SAMPLES_PER_TENSOR};
pub use loss::{bce_batch_loss, bce_grad, bce_loss, PROB_CLAMP};
pub use trainer::{batch_gradients, evaluate, log_csv, train, train_from, EpochLog, Evaluation, Example, TrainOutcome};

use crate::error::{Error, Result};
use crate::model::Architecture;

/// Default L2 threshold when gradient clipping is switched on.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub shuffle: bool,
    /// L2 gradient-norm clipping threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub arch: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
            shuffle: true,
            clip_norm: None,
            arch: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        if !(a.learning_rate >= 0.0 && a.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", a.learning_rate)));
        }
        for (name, b) in [("beta1", a.beta1), ("beta2", a.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(a.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", a.epsilon)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip_norm must be > 0, got {c}")));
            }
        }
        self.arch.validate()
    }
}
