//! Proximal policy optimisation for the closure environment.
//!
//! Small tanh networks, generalized advantage estimation, the clipped
//! surrogate objective and Adam, all written out by hand. One network
//! controls one or several districts (a joint "super-agent").

pub mod adam;
pub mod checkpoint;
pub mod evaluate;
pub mod gae;
pub mod loss;
pub mod model;
pub mod net;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use evaluate::{evaluate_policy, AggregatedPolicy, AllOpen, ClosurePolicy, Evaluation, SchedulePolicy};
pub use gae::gae;
pub use loss::{ppo_update, RolloutBatch, UpdateStats};
pub use model::{sample_action, ActorCritic};
pub use train::{train, train_trials, write_learning_curve, TrainResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoHyper {
    pub local_steps: usize,
    pub minibatch: usize,
    pub clip: f64,
    pub epochs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub grad_clip_norm: f64,
    pub normalize_advantages: bool,
}

impl Default for PpoHyper {
    fn default() -> Self {
        Self {
            local_steps: 1024,
            minibatch: 128,
            clip: 0.2,
            epochs: 24,
            entropy_coef: 0.0059,
            value_coef: 0.5,
            gamma: 0.99,
            gae_lambda: 0.95,
            hidden: vec![20],
            learning_rate: 0.002,
            grad_clip_norm: 1.0,
            normalize_advantages: true,
        }
    }
}

impl PpoHyper {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.grad_clip_norm];
        if self.local_steps == 0 || self.minibatch == 0 || self.epochs == 0 || self.hidden.contains(&0) {
            return Err(Error::param("batch sizes, epochs and hidden sizes must be positive"));
        }
        if positive.iter().any(|v| !(*v > 0.0)) || self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return Err(Error::param("learning rate, clip norm and loss coefficients must be positive"));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::param("clip range must lie in (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0 && self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return Err(Error::param("discount and GAE lambda must lie in (0, 1]"));
        }
        Ok(())
    }
}
