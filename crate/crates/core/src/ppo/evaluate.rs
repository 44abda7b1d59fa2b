//! Closure policies and paired stochastic evaluation against the all-open
//! baseline.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{check_len, ActorCritic};
use crate::env::{Env, EnvConfig, OBS_PER_PATCH};
use crate::error::{Error, Result};
use crate::groundtruth::BinaryPolicy;
use crate::rng::derive_seed;
use crate::stats::Summary;

/// Weekly close decisions for the controlled districts.
pub trait ClosurePolicy: Sync {
    fn districts(&self) -> usize;
    fn decide(&self, week: usize, obs: &[f64]) -> Result<Vec<bool>>;
}

/// A trained network acting greedily.
impl ClosurePolicy for ActorCritic {
    fn districts(&self) -> usize {
        ActorCritic::districts(self)
    }

    fn decide(&self, _week: usize, obs: &[f64]) -> Result<Vec<bool>> {
        self.mode(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllOpen(pub usize);

impl ClosurePolicy for AllOpen {
    fn districts(&self) -> usize {
        self.0
    }

    fn decide(&self, _week: usize, _obs: &[f64]) -> Result<Vec<bool>> {
        Ok(vec![false; self.0])
    }
}

/// A fixed open-loop schedule; weeks past its end are open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulePolicy {
    /// `closed[week][district]`.
    pub closed: Vec<Vec<bool>>,
    pub districts: usize,
}

impl SchedulePolicy {
    pub fn from_binary(policy: &BinaryPolicy) -> Self {
        Self { closed: policy.closed_flags(policy.weeks()).into_iter().map(|c| vec![c]).collect(), districts: 1 }
    }
}

impl ClosurePolicy for SchedulePolicy {
    fn districts(&self) -> usize {
        self.districts
    }

    fn decide(&self, week: usize, _obs: &[f64]) -> Result<Vec<bool>> {
        Ok(self.closed.get(week).cloned().unwrap_or_else(|| vec![false; self.districts]))
    }
}

/// Independently trained single-district networks, each reading only its
/// own district's block of the joint observation.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedPolicy {
    pub members: Vec<ActorCritic>,
}

impl AggregatedPolicy {
    pub fn new(members: Vec<ActorCritic>) -> Result<Self> {
        if members.iter().any(|m| m.districts() != 1 || m.inputs() != OBS_PER_PATCH) {
            return Err(Error::param("aggregated members must be single-district networks"));
        }
        Ok(Self { members })
    }
}

impl ClosurePolicy for AggregatedPolicy {
    fn districts(&self) -> usize {
        self.members.len()
    }

    fn decide(&self, _week: usize, obs: &[f64]) -> Result<Vec<bool>> {
        check_len(OBS_PER_PATCH * self.members.len(), obs.len())?;
        self.members.iter().zip(obs.chunks(OBS_PER_PATCH)).map(|(m, block)| Ok(m.mode(block)?[0])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub seeds: Vec<u64>,
    pub baseline_attack_rates: Vec<f64>,
    pub policy_attack_rates: Vec<f64>,
    /// Baseline minus policy attack rate over the controlled districts.
    pub improvements: Vec<f64>,
    /// The same over every patch of the model.
    pub improvements_all_patches: Vec<f64>,
    pub closures: Vec<u32>,
    pub summary: Summary,
}

fn run_episode(policy: &dyn ClosurePolicy, config: &EnvConfig, seed: u64) -> Result<(f64, f64, u32)> {
    let mut env = Env::new(config.clone(), seed)?;
    let mut obs = env.observation();
    let mut closures = 0;
    while !env.is_done() {
        let action = policy.decide(env.week(), &obs)?;
        let out = env.step(&action)?;
        closures += out.applied.iter().filter(|&&c| c).count() as u32;
        obs = out.observation;
    }
    let all = -env.log().summary().total_reward_all_patches / config.scenario.population();
    Ok((env.attack_rate(), all, closures))
}

/// Runs `policy` and the all-open baseline on the same `runs` episode seeds.
pub fn evaluate_policy(policy: &dyn ClosurePolicy, config: &EnvConfig, runs: usize, seed: u64) -> Result<Evaluation> {
    check_len(config.controlled.len(), policy.districts())?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| derive_seed(seed, i)).collect();
    let baseline = AllOpen(config.controlled.len());
    let one = |&s: &u64| -> Result<[f64; 5]> {
        let (b, b_all, _) = run_episode(&baseline, config, s)?;
        let (p, p_all, c) = run_episode(policy, config, s)?;
        Ok([b, p, b - p, b_all - p_all, c as f64])
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<[f64; 5]> = seeds.par_iter().map(one).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<[f64; 5]> = seeds.iter().map(one).collect::<Result<_>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let improvements = col(2);
    Ok(Evaluation {
        summary: Summary::of(&improvements),
        seeds,
        baseline_attack_rates: col(0),
        policy_attack_rates: col(1),
        improvements,
        improvements_all_patches: col(3),
        closures: rows.iter().map(|r| r[4] as u32).collect(),
    })
}
