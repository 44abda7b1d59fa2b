//! Policy and value networks of the closure agent.
//!
//! The policy network emits one logit per controlled district; its sigmoid
//! is the probability of closing that district's schools. Districts act as
//! independent Bernoulli draws, so the joint log-probability is the sum of
//! the per-district terms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{sigmoid, softplus, Activation, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub policy: Mlp,
    pub value: Mlp,
}

impl ActorCritic {
    /// Zero-initialised networks with tanh hidden layers.
    pub fn new(inputs: usize, districts: usize, hidden: &[usize]) -> Result<Self> {
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        let mut acts = vec![Activation::Tanh; hidden.len()];
        acts.push(Activation::Identity);
        let mut policy_sizes = sizes.clone();
        policy_sizes.push(districts);
        sizes.push(1);
        Ok(Self { policy: Mlp::new(&policy_sizes, &acts)?, value: Mlp::new(&sizes, &acts)? })
    }

    /// Orthogonal weights: gain sqrt(2) on hidden layers, 0.01 on the policy
    /// head and 1 on the value head.
    pub fn initialized<R: Rng + ?Sized>(
        inputs: usize,
        districts: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::new(inputs, districts, hidden)?;
        let mut gains = vec![std::f64::consts::SQRT_2; hidden.len()];
        gains.push(0.01);
        net.policy.init_orthogonal(&gains, rng);
        *gains.last_mut().expect("head") = 1.0;
        net.value.init_orthogonal(&gains, rng);
        Ok(net)
    }

    pub fn inputs(&self) -> usize {
        self.policy.inputs()
    }

    pub fn districts(&self) -> usize {
        self.policy.outputs()
    }

    pub fn logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.policy.forward(obs)
    }

    pub fn value_of(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.value.forward(obs)?[0])
    }

    /// Close-probabilities and state value.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let probs = self.logits(obs)?.into_iter().map(sigmoid).collect();
        Ok((probs, self.value_of(obs)?))
    }

    /// Greedy action: close where the close-probability exceeds one half.
    pub fn mode(&self, obs: &[f64]) -> Result<Vec<bool>> {
        Ok(self.logits(obs)?.into_iter().map(|z| z > 0.0).collect())
    }

    pub fn param_count(&self) -> usize {
        self.policy.params().len() + self.value.params().len()
    }
}

/// Samples one close/open decision per district and returns the joint
/// log-probability.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> (Vec<bool>, f64) {
    let mut logp = 0.0;
    let action = probs
        .iter()
        .map(|&p| {
            let close = rng.random::<f64>() < p;
            logp += if close { p.ln() } else { (-p).ln_1p() };
            close
        })
        .collect();
    (action, logp)
}

/// Joint log-probability of `action` (1 = close) under the logits.
pub fn log_prob(logits: &[f64], action: &[f64]) -> f64 {
    logits.iter().zip(action).map(|(&z, &a)| -a * softplus(-z) - (1.0 - a) * softplus(z)).sum()
}

/// Sum of the per-district Bernoulli entropies.
pub fn entropy(logits: &[f64]) -> f64 {
    logits.iter().map(|&z| softplus(z) - z * sigmoid(z)).sum()
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};

    #[test]
    fn zero_network_is_indifferent() {
        let net = ActorCritic::new(34, 2, &[20]).unwrap();
        let (p, v) = net.forward(&[0.1; 34]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert_eq!(v, 0.0);
        assert_eq!(entropy(&[0.0]), std::f64::consts::LN_2);
    }

    #[test]
    fn initialized_outputs_are_deterministic_and_bounded() {
        let mut r = rng::stream(3, Stream::Init, 0);
        let net = ActorCritic::initialized(17, 1, &[20], &mut r).unwrap();
        let obs: Vec<f64> = (0..17).map(|i| i as f64 / 17.0).collect();
        let a = net.forward(&obs).unwrap();
        assert_eq!(a, net.forward(&obs).unwrap());
        assert!(a.0.iter().all(|p| *p > 0.0 && *p < 1.0) && a.1.is_finite());
        assert!((a.0[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn near_certain_probabilities() {
        let mut r = rng::stream(1, Stream::Policy, 0);
        let (a, lp) = sample_action(&[1.0 - 1e-12; 3], &mut r);
        assert_eq!(a, vec![true; 3]);
        assert!(lp.abs() < 1e-10);
        let (_, half) = sample_action(&[0.5], &mut r);
        assert_eq!(half, 0.5f64.ln());
    }

    #[test]
    fn close_frequency() {
        let mut r = rng::stream(2, Stream::Policy, 0);
        let n = 100_000;
        let closes = (0..n).filter(|_| sample_action(&[0.3], &mut r).0[0]).count();
        assert!((closes as f64 / n as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn log_prob_agrees_with_probabilities() {
        let z = [0.4, -1.3];
        let p: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let want = p[0].ln() + (1.0 - p[1]).ln();
        assert!((log_prob(&z, &[1.0, 0.0]) - want).abs() < 1e-14);
    }
}
