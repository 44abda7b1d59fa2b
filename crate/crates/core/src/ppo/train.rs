//! Rollout collection and the training loop.

use std::io::Write;

use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::adam::Adam;
use super::loss::{ppo_update, RolloutBatch, UpdateStats};
use super::model::{log_prob, sample_action, ActorCritic};
use super::net::sigmoid;
use super::PpoHyper;
use crate::env::{Env, EnvConfig};
use crate::error::Result;
use crate::rng::{self, derive_seed, Stream};
use crate::stats::rolling_mean;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub net: ActorCritic,
    /// Unscaled return of every completed episode, in order.
    pub episode_returns: Vec<f64>,
    pub updates: Vec<UpdateStats>,
    pub seed: u64,
}

/// Trains one agent for `episodes` complete episodes. `on_update` is called
/// after every update with its index and the current network.
pub fn train(
    config: &EnvConfig,
    hyper: &PpoHyper,
    episodes: usize,
    seed: u64,
    mut on_update: impl FnMut(usize, &ActorCritic) -> Result<()>,
) -> Result<TrainResult> {
    hyper.validate()?;
    let mut init = rng::stream(seed, Stream::Init, 0);
    let mut policy_rng = rng::stream(seed, Stream::Policy, 0);
    let mut episode_rng = rng::stream(seed, Stream::Episodes, 0);
    let mut net =
        ActorCritic::initialized(config.observation_len(), config.controlled.len(), &hyper.hidden, &mut init)?;
    let mut opt = Adam::new(net.param_count(), hyper.learning_rate);

    let mut env = Env::new(config.clone(), episode_rng.random())?;
    let mut obs = env.observation();
    let mut returns = Vec::with_capacity(episodes);
    let mut updates = Vec::new();
    let mut running = 0.0;
    while returns.len() < episodes {
        let mut batch = RolloutBatch::new(config.observation_len(), config.controlled.len());
        while batch.len() < hyper.local_steps && returns.len() < episodes {
            if env.is_done() {
                // zero-length horizon: nothing to learn from
                returns.push(0.0);
                env.reset(episode_rng.random())?;
                obs = env.observation();
                continue;
            }
            let logits = net.logits(&obs)?;
            let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
            let (action, _) = sample_action(&probs, &mut policy_rng);
            let af: Vec<f64> = action.iter().map(|&a| f64::from(u8::from(a))).collect();
            let value = net.value_of(&obs)?;
            let out = env.step(&action)?;
            running += out.raw_reward;
            batch.push(&obs, &action, log_prob(&logits, &af), out.reward, value, out.done);
            if out.done {
                returns.push(running);
                running = 0.0;
                env.reset(episode_rng.random())?;
                obs = env.observation();
            } else {
                obs = out.observation;
            }
        }
        if batch.len() < hyper.minibatch.min(hyper.local_steps) {
            break;
        }
        let last = if batch.dones.last() == Some(&true) { 0.0 } else { net.value_of(&obs)? };
        batch.finish(last, hyper.gamma, hyper.gae_lambda);
        let stats = ppo_update(&mut net, &mut opt, &batch, hyper, &mut policy_rng)?;
        log::debug!(
            "update {}: episodes {} kl {:.4} entropy {:.3} value {:.3e}",
            updates.len(),
            returns.len(),
            stats.approx_kl,
            stats.entropy,
            stats.value_loss
        );
        updates.push(stats);
        on_update(updates.len(), &net)?;
    }
    Ok(TrainResult { net, episode_returns: returns, updates, seed })
}

/// Independent trials with seeds derived from `seed`, run in parallel.
pub fn train_trials(
    config: &EnvConfig,
    hyper: &PpoHyper,
    episodes: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrainResult>> {
    let run = |t: usize| train(config, hyper, episodes, derive_seed(seed, t as u64), |_, _| Ok(()));
    #[cfg(feature = "parallel")]
    return (0..trials).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..trials).map(run).collect();
}

/// Learning-curve CSV: episode, return and its trailing mean over 100
/// episodes.
pub fn write_learning_curve<W: Write>(returns: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "return", "rolling_mean_100"])?;
    for (k, (r, m)) in returns.iter().zip(rolling_mean(returns, 100)).enumerate() {
        w.write_record([(k + 1).to_string(), r.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
