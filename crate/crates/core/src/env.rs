//! Weekly school-closure decision process on top of the meta-population
//! model.
//!
//! Each step is one week. For every controlled patch the agent chooses to
//! keep schools open or to close them; a close request on an exhausted
//! budget is executed as open. The reward is the negative number of new
//! infections (susceptible loss) in the controlled patches over the week.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metapop::{Metapop, Scenario, Trajectory};
use crate::types::GROUPS;

/// Inputs per controlled patch: 16 compartments and the remaining budget.
pub const OBS_PER_PATCH: usize = 4 * GROUPS + 1;

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub scenario: Arc<Scenario>,
    /// Patch indices under control, in observation order.
    pub controlled: Vec<usize>,
    pub budget_weeks: u32,
    pub horizon_weeks: usize,
}

impl EnvConfig {
    pub fn new(scenario: Arc<Scenario>, controlled: Vec<usize>, budget_weeks: u32) -> Result<Self> {
        let horizon_weeks = scenario.params().horizon_weeks;
        if controlled.is_empty() {
            return Err(Error::config("at least one controlled patch is required"));
        }
        let mut seen = vec![false; scenario.len()];
        for &p in &controlled {
            match seen.get_mut(p) {
                None => return Err(Error::config(format!("controlled patch {p} outside the model"))),
                Some(true) => return Err(Error::config(format!("patch {p} listed twice"))),
                Some(s) => *s = true,
            }
        }
        if budget_weeks as usize > horizon_weeks {
            return Err(Error::config(format!("budget {budget_weeks} exceeds the {horizon_weeks}-week horizon")));
        }
        Ok(Self { scenario, controlled, budget_weeks, horizon_weeks })
    }

    pub fn observation_len(&self) -> usize {
        OBS_PER_PATCH * self.controlled.len()
    }

    pub fn controlled_population(&self) -> f64 {
        self.controlled.iter().map(|&p| self.scenario.censuses()[p].total()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    /// Reward divided by the controlled population.
    pub reward: f64,
    /// Negative susceptible loss in the controlled patches.
    pub raw_reward: f64,
    /// Negative susceptible loss over all patches.
    pub reward_all_patches: f64,
    pub done: bool,
    /// Closures actually applied per controlled patch.
    pub applied: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub week: usize,
    pub requested: Vec<bool>,
    pub applied: Vec<bool>,
    pub raw_reward: f64,
    pub reward_all_patches: f64,
    pub budgets: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub controlled_ids: Vec<String>,
    pub rows: Vec<EpisodeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub weeks: usize,
    pub total_reward: f64,
    pub total_reward_all_patches: f64,
    pub closures: Vec<(String, u32)>,
}

impl EpisodeLog {
    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            seed: self.seed,
            weeks: self.rows.len(),
            total_reward: episode_return(self),
            total_reward_all_patches: self.rows.iter().map(|r| r.reward_all_patches).sum(),
            closures: self
                .controlled_ids
                .iter()
                .enumerate()
                .map(|(k, id)| (id.clone(), self.rows.iter().filter(|r| r.applied[k]).count() as u32))
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["week".to_string()];
        for id in &self.controlled_ids {
            header.push(format!("request_{id}"));
            header.push(format!("closed_{id}"));
            header.push(format!("budget_{id}"));
        }
        header.push("reward".into());
        header.push("reward_all_patches".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut row = vec![r.week.to_string()];
            for k in 0..self.controlled_ids.len() {
                row.push(u8::from(r.requested[k]).to_string());
                row.push(u8::from(r.applied[k]).to_string());
                row.push(r.budgets[k].to_string());
            }
            row.push(r.raw_reward.to_string());
            row.push(r.reward_all_patches.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sum of the weekly (unscaled) rewards of an episode.
pub fn episode_return(log: &EpisodeLog) -> f64 {
    log.rows.iter().map(|r| r.raw_reward).sum()
}

/// One environment instance.
#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    model: Metapop,
    week: usize,
    log: EpisodeLog,
    initial_susceptible: f64,
}

impl Env {
    /// Creates the environment and resets it with `seed`.
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        let model = Metapop::new(Arc::clone(&config.scenario), seed)?;
        let controlled_ids =
            config.controlled.iter().map(|&p| config.scenario.censuses()[p].district_id.clone()).collect();
        let mut env = Self {
            config,
            model,
            week: 0,
            log: EpisodeLog { seed, controlled_ids, rows: Vec::new() },
            initial_susceptible: 0.0,
        };
        env.reset(seed)?;
        Ok(env)
    }

    /// Starts a fresh episode and returns the first observation.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.model = Metapop::new(Arc::clone(&self.config.scenario), seed)?;
        self.model.set_parallel(false);
        for &p in &self.config.controlled {
            self.model.patch_mut(p).budget_remaining = self.config.budget_weeks;
        }
        self.week = 0;
        self.log.seed = seed;
        self.log.rows.clear();
        self.initial_susceptible = self.controlled_susceptible();
        Ok(self.observation())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn model(&self) -> &Metapop {
        &self.model
    }

    pub fn week(&self) -> usize {
        self.week
    }

    pub fn is_done(&self) -> bool {
        self.week >= self.config.horizon_weeks
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn budgets(&self) -> Vec<u32> {
        self.config.controlled.iter().map(|&p| self.model.patch(p).budget_remaining).collect()
    }

    fn controlled_susceptible(&self) -> f64 {
        self.config.controlled.iter().map(|&p| self.model.patch(p).state.total_susceptible()).sum()
    }

    /// Susceptible loss in the controlled patches since reset, as a fraction
    /// of their population.
    pub fn attack_rate(&self) -> f64 {
        (self.initial_susceptible - self.controlled_susceptible()) / self.config.controlled_population()
    }

    pub fn observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.config.observation_len());
        let b = self.config.budget_weeks;
        for &p in &self.config.controlled {
            let patch = self.model.patch(p);
            let n = self.config.scenario.censuses()[p].total();
            obs.extend(patch.state.flatten().iter().map(|v| v / n));
            obs.push(if b == 0 { 0.0 } else { patch.budget_remaining as f64 / b as f64 });
        }
        obs
    }

    /// Applies one week of actions (`true` = close schools).
    pub fn step(&mut self, close: &[bool]) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        if close.len() != self.config.controlled.len() {
            return Err(Error::Shape { expected: self.config.controlled.len(), got: close.len() });
        }
        let mut applied = Vec::with_capacity(close.len());
        for (&p, &want) in self.config.controlled.iter().zip(close) {
            let patch = self.model.patch_mut(p);
            let shut = want && patch.budget_remaining > 0;
            if shut {
                patch.budget_remaining -= 1;
            }
            self.model.set_closed(p, shut);
            applied.push(shut);
        }
        let before = self.controlled_susceptible();
        let before_all = self.model.total_susceptible();
        self.model.advance_week();
        let raw_reward = -(before - self.controlled_susceptible());
        let reward_all_patches = -(before_all - self.model.total_susceptible());
        self.log.rows.push(EpisodeRow {
            week: self.week,
            requested: close.to_vec(),
            applied: applied.clone(),
            raw_reward,
            reward_all_patches,
            budgets: self.budgets(),
        });
        self.week += 1;
        Ok(StepOutcome {
            observation: self.observation(),
            reward: raw_reward / self.config.controlled_population(),
            raw_reward,
            reward_all_patches,
            done: self.is_done(),
            applied,
        })
    }

    /// Trajectory of the current episode so far.
    pub fn trajectory(&self) -> Trajectory {
        self.model.clone().into_trajectory()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metapop::{simulate, ClosureSchedule, MobilityMatrix, ModelParams};
    use crate::synth;
    use crate::types::Census;

    fn census(id: &str) -> Census {
        Census::new(id, [6e3, 16e3, 60e3, 18e3]).unwrap()
    }

    fn single(params: ModelParams, budget: u32) -> Env {
        let sc = Arc::new(Scenario::single_district(census("a"), &synth::contact_pair(), params).unwrap());
        Env::new(EnvConfig::new(sc, vec![0], budget).unwrap(), 4).unwrap()
    }

    #[test]
    fn reset_observation_contract() {
        let mut env = single(ModelParams::default(), 6);
        let obs = env.reset(17).unwrap();
        assert_eq!(obs.len(), OBS_PER_PATCH);
        assert_eq!(obs[16], 1.0);
        assert!(obs.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(env.reset(17).unwrap(), obs);
    }

    #[test]
    fn disease_free_gives_zero_rewards() {
        let mut env = single(ModelParams { seed_infected: 0.0, ..Default::default() }, 2);
        while !env.is_done() {
            assert_eq!(env.step(&[true]).unwrap().raw_reward, 0.0);
        }
        assert!(matches!(env.step(&[false]), Err(Error::EpisodeDone)));
    }

    #[test]
    fn exhausted_budget_defaults_to_open() {
        let mut env = single(ModelParams::default(), 2);
        let a = env.step(&[true]).unwrap();
        let b = env.step(&[true]).unwrap();
        let c = env.step(&[true]).unwrap();
        assert_eq!((a.applied[0], b.applied[0], c.applied[0]), (true, true, false));
        assert_eq!(env.budgets(), vec![0]);
        assert_eq!(c.observation[16], 0.0);
        assert!(!env.model().schools_closed(0));
    }

    #[test]
    fn rewards_telescope() {
        let mut env = single(ModelParams::default(), 4);
        let s0 = env.model().patch(0).state.total_susceptible();
        let mut acc = 0.0;
        let mut week = 0;
        while !env.is_done() {
            acc += env.step(&[(10..14).contains(&week)]).unwrap().raw_reward;
            week += 1;
        }
        let s_end = env.model().patch(0).state.total_susceptible();
        assert!((acc - (s_end - s0)).abs() < 1e-6 * s0);
        assert!((episode_return(env.log()) - acc).abs() < 1e-9 * s0);
        let n = env.config().controlled_population();
        assert!((env.attack_rate() + acc / n).abs() < 1e-12);
    }

    #[test]
    fn all_open_env_matches_simulate() {
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let mob = MobilityMatrix::new(
            ids.clone(),
            vec![vec![0.0, 900.0, 0.0], vec![900.0, 0.0, 400.0], vec![0.0, 400.0, 0.0]],
        )
        .unwrap();
        let sc = Arc::new(
            Scenario::new(ids.iter().map(|i| census(i)).collect(), mob, &synth::contact_pair(), ModelParams::default())
                .unwrap(),
        );
        let mut env = Env::new(EnvConfig::new(Arc::clone(&sc), vec![1, 2], 6).unwrap(), 0).unwrap();
        env.reset(33).unwrap();
        while !env.is_done() {
            env.step(&[false, false]).unwrap();
        }
        let reference = simulate(&sc, &ClosureSchedule::all_open(3, 43), 33).unwrap();
        assert_eq!(env.trajectory().days, reference.days);
    }

    #[test]
    fn zero_horizon_returns_nothing() {
        let env = single(ModelParams { horizon_weeks: 0, ..Default::default() }, 0);
        assert!(env.is_done());
        assert_eq!(episode_return(env.log()), 0.0);
    }

    #[test]
    fn config_validation() {
        let sc =
            Arc::new(Scenario::single_district(census("a"), &synth::contact_pair(), ModelParams::default()).unwrap());
        assert!(EnvConfig::new(Arc::clone(&sc), vec![], 2).is_err());
        assert!(EnvConfig::new(Arc::clone(&sc), vec![1], 2).is_err());
        assert!(EnvConfig::new(Arc::clone(&sc), vec![0, 0], 2).is_err());
        assert!(EnvConfig::new(sc, vec![0], 44).is_err());
    }
}
