//! Clipped-surrogate loss, its analytic gradient and the PPO update.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_global_norm, Adam};
use super::model::{entropy, log_prob, ActorCritic};
use super::net::sigmoid;
use super::PpoHyper;
use crate::error::{Error, Result};

/// One rollout of `len()` environment steps, stored flat.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub districts: usize,
    pub observations: Vec<f64>,
    /// 1.0 = close, per district.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn new(obs_dim: usize, districts: usize) -> Self {
        Self { obs_dim, districts, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, obs: &[f64], action: &[bool], log_prob: f64, reward: f64, value: f64, done: bool) {
        self.observations.extend_from_slice(obs);
        self.actions.extend(action.iter().map(|&a| f64::from(u8::from(a))));
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.districts..(i + 1) * self.districts]
    }

    /// Fills advantages and returns by GAE.
    pub fn finish(&mut self, last_value: f64, gamma: f64, lambda: f64) {
        let (a, r) = super::gae::gae(&self.rewards, &self.values, &self.dones, last_value, gamma, lambda);
        self.advantages = a;
        self.returns = r;
    }
}

/// Mean loss components over a minibatch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Loss over the samples `idx` with advantages `adv`, and its gradient with
/// respect to the policy parameters followed by the value parameters.
pub fn loss_and_grad(
    net: &ActorCritic,
    batch: &RolloutBatch,
    adv: &[f64],
    idx: &[usize],
    hyper: &PpoHyper,
) -> Result<(LossTerms, Vec<f64>)> {
    let np = net.policy.params().len();
    let mut grad = vec![0.0; net.param_count()];
    let (gp, gv) = grad.split_at_mut(np);
    let m = idx.len() as f64;
    let mut t = LossTerms::default();
    for &i in idx {
        let obs = batch.obs(i);
        let action = batch.action(i);
        let pc = net.policy.forward_cached(obs)?;
        let z = pc.output();
        let logp = log_prob(z, action);
        let log_ratio = logp - batch.log_probs[i];
        let ratio = log_ratio.exp();
        let a = adv[i];
        let clipped = ratio.clamp(1.0 - hyper.clip, 1.0 + hyper.clip);
        let unclipped_active = ratio * a <= clipped * a;
        t.policy -= (ratio * a).min(clipped * a) / m;
        t.entropy += entropy(z) / m;
        t.approx_kl += (ratio - 1.0 - log_ratio) / m;
        if (ratio - 1.0).abs() > hyper.clip {
            t.clip_fraction += 1.0 / m;
        }
        let gz: Vec<f64> = z
            .iter()
            .zip(action)
            .map(|(&zk, &ak)| {
                let p = sigmoid(zk);
                let surrogate = if unclipped_active { -a * ratio * (ak - p) } else { 0.0 };
                (surrogate + hyper.entropy_coef * zk * p * (1.0 - p)) / m
            })
            .collect();
        net.policy.backward(&pc, &gz, gp);

        let vc = net.value.forward_cached(obs)?;
        let err = vc.output()[0] - batch.returns[i];
        t.value += err * err / m;
        net.value.backward(&vc, &[hyper.value_coef * 2.0 * err / m], gv);
    }
    t.total = t.policy + hyper.value_coef * t.value - hyper.entropy_coef * t.entropy;
    Ok((t, grad))
}

/// Advantages scaled to mean 0 and standard deviation 1.
pub fn normalize(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let sd = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    adv.iter().map(|a| (a - mean) / (sd + 1e-8)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// Runs the epochs of one PPO update on a finished batch.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut ActorCritic,
    opt: &mut Adam,
    batch: &RolloutBatch,
    hyper: &PpoHyper,
    rng: &mut R,
) -> Result<UpdateStats> {
    if batch.advantages.len() != batch.len() {
        return Err(Error::param("batch advantages have not been computed"));
    }
    if batch.advantages.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numerical("non-finite advantages".into()));
    }
    let adv = if hyper.normalize_advantages { normalize(&batch.advantages) } else { batch.advantages.clone() };
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut stats = UpdateStats::default();
    for _ in 0..hyper.epochs {
        order.shuffle(rng);
        for idx in order.chunks(hyper.minibatch) {
            let (terms, mut grad) = loss_and_grad(net, batch, &adv, idx, hyper)?;
            if !terms.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!("non-finite loss {}", terms.total)));
            }
            stats.grad_norm += clip_global_norm(&mut grad, hyper.grad_clip_norm);
            opt.step(&mut [net.policy.params_mut(), net.value.params_mut()], &grad);
            stats.policy_loss += terms.policy;
            stats.value_loss += terms.value;
            stats.entropy += terms.entropy;
            stats.approx_kl += terms.approx_kl;
            stats.clip_fraction += terms.clip_fraction;
            stats.minibatches += 1;
        }
    }
    let k = stats.minibatches.max(1) as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.approx_kl /= k;
    stats.clip_fraction /= k;
    stats.grad_norm /= k;
    Ok(stats)
}
