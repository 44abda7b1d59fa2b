//! The meta-population model: district SEIR patches coupled by commuting.
//!
//! Infected patches run their own stochastic SEIR dynamics. Uninfected patches
//! are frozen until an arrival of the non-homogeneous Poisson process driven
//! by the between-patch force of infection fires, after which they are
//! seeded with a small inoculum and evolve on their own.

mod arrival;
mod mobility;
mod trajectory;

use std::sync::Arc;

use rand::Rng as _;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use arrival::{between_patch_intensity, cumulative_intensity, maybe_infect, ArrivalMode, PatchRuntime};
pub use mobility::{MobilityMatrix, MobilityNormalization};
pub use trajectory::{DayRecord, RunSummary, Trajectory, WeekRecord};

use crate::error::{Error, Result};
use crate::intra_patch::{self, StepParams};
use crate::rng::{self, Stream, StreamRng};
use crate::types::{AgeGroup, Census, ContactMatrix, ContactPair, EpiParams, SeirState};

/// Patches below this count are stepped on the calling thread.
#[cfg(feature = "parallel")]
const PARALLEL_MIN_PATCHES: usize = 48;

/// `mu = ln(r0) * s`, clamped to `[0, 1]`.
pub fn calibrate_mu(r0: f64, s: f64) -> Result<f64> {
    if !(r0 > 1.0) {
        return Err(Error::param(format!("mu calibration needs R0 > 1, got {r0}")));
    }
    if !(s >= 0.0) {
        return Err(Error::param(format!("mu scale must be non-negative, got {s}")));
    }
    Ok((r0.ln() * s).clamp(0.0, 1.0))
}

/// Exogenous school holiday covering weeks `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidayWindow {
    pub start_week: usize,
    pub end_week: usize,
}

/// Epidemiological and integration settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub r0: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub mu_scale: f64,
    /// Fixed exponent instead of the calibrated one.
    pub mu: Option<f64>,
    pub dt: f64,
    pub horizon_weeks: usize,
    pub seed_patch: usize,
    /// Infectious adults placed in the index patch on day 0.
    pub seed_infected: f64,
    /// Adults exposed when an arrival infects a patch.
    pub import_inoculum: f64,
    pub holidays: Vec<HolidayWindow>,
    /// Intra-patch noise and exponential arrival thresholds; `false` gives
    /// the deterministic model.
    pub stochastic: bool,
    pub mobility_normalization: MobilityNormalization,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            r0: 1.8,
            gamma: 1.0 / 1.8,
            zeta: 1.0,
            mu_scale: 0.6,
            mu: None,
            dt: 0.25,
            horizon_weeks: 43,
            seed_patch: 0,
            seed_infected: 10.0,
            import_inoculum: 1.0,
            holidays: Vec::new(),
            stochastic: true,
            mobility_normalization: MobilityNormalization::PerCapitaOrigin,
        }
    }
}

impl ModelParams {
    pub fn deterministic(mut self) -> Self {
        self.stochastic = false;
        self
    }

    pub fn steps_per_day(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::param(format!("dt must lie in (0, 1], got {}", self.dt)));
        }
        let steps = (1.0 / self.dt).round();
        if (steps * self.dt - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("dt = {} does not divide one day", self.dt)));
        }
        Ok(steps as usize)
    }

    pub fn is_holiday(&self, week: usize) -> bool {
        self.holidays.iter().any(|h| (h.start_week..h.end_week).contains(&week))
    }

    fn arrival_mode(&self) -> ArrivalMode {
        if self.stochastic {
            ArrivalMode::Stochastic
        } else {
            ArrivalMode::Expected
        }
    }

    fn validate(&self, patches: usize) -> Result<()> {
        self.steps_per_day()?;
        if self.seed_patch >= patches {
            return Err(Error::config(format!("seed patch {} outside {patches} patches", self.seed_patch)));
        }
        if !(self.seed_infected >= 0.0) || !(self.import_inoculum >= 0.0) {
            return Err(Error::param("seed counts must be non-negative"));
        }
        Ok(())
    }
}

/// Immutable description of a model: districts, coupling and parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    censuses: Vec<Census>,
    raw_contacts: ContactPair,
    contacts: Vec<ContactPair>,
    inbound: Vec<Vec<(usize, f64)>>,
    mobility: MobilityMatrix,
    epi: EpiParams,
    params: ModelParams,
}

impl Scenario {
    /// `contacts` are raw survey matrices; each district receives its own
    /// reciprocity-corrected copy, and `beta` is calibrated on the correction
    /// for the pooled population.
    pub fn new(
        censuses: Vec<Census>,
        mobility: MobilityMatrix,
        contacts: &ContactPair,
        params: ModelParams,
    ) -> Result<Self> {
        if censuses.is_empty() {
            return Err(Error::config("a model needs at least one district"));
        }
        if mobility.len() != censuses.len() {
            return Err(Error::Shape { expected: censuses.len(), got: mobility.len() });
        }
        params.validate(censuses.len())?;
        let pooled = Census::aggregate("pooled", &censuses)?;
        let pooled_term = crate::reproduction::make_reciprocal(&contacts.term, &pooled)?;
        let epi = EpiParams::from_r0(&pooled_term, params.r0, params.gamma, params.zeta, params.mu_scale, params.mu)?;
        let raw_contacts = contacts.clone();
        let contacts = censuses.iter().map(|c| contacts.reciprocal_for(c)).collect::<Result<Vec<_>>>()?;
        let populations: Vec<f64> = censuses.iter().map(Census::total).collect();
        let inbound = mobility::inbound_lists(&mobility, &populations, params.mobility_normalization);
        Ok(Self { censuses, raw_contacts, contacts, inbound, mobility, epi, params })
    }

    pub fn single_district(census: Census, contacts: &ContactPair, params: ModelParams) -> Result<Self> {
        let mobility = MobilityMatrix::zeros(vec![census.district_id.clone()]);
        Self::new(vec![census], mobility, contacts, params)
    }

    pub fn len(&self) -> usize {
        self.censuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.censuses.is_empty()
    }

    pub fn censuses(&self) -> &[Census] {
        &self.censuses
    }

    pub fn contacts(&self, p: usize) -> &ContactPair {
        &self.contacts[p]
    }

    pub fn mobility(&self) -> &MobilityMatrix {
        &self.mobility
    }

    pub fn epi(&self) -> &EpiParams {
        &self.epi
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn patch_index(&self, district_id: &str) -> Option<usize> {
        self.censuses.iter().position(|c| c.district_id == district_id)
    }

    pub fn population(&self) -> f64 {
        self.censuses.iter().map(Census::total).sum()
    }

    /// The contact matrices as supplied, before reciprocity correction.
    pub fn raw_contacts(&self) -> &ContactPair {
        &self.raw_contacts
    }

    /// Copy with different parameters (re-derives `beta` and `mu`).
    pub fn with_params(&self, params: ModelParams) -> Result<Self> {
        Self::new(self.censuses.clone(), self.mobility.clone(), &self.raw_contacts, params)
    }

    /// Restriction to a subset of districts, in the given order.
    pub fn subset(&self, keep: &[usize], params: ModelParams) -> Result<Self> {
        let censuses = keep.iter().map(|&i| self.censuses[i].clone()).collect();
        Self::new(censuses, self.mobility.subset(keep), &self.raw_contacts, params)
    }
}

/// Weekly closure flags per patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureSchedule {
    weeks: usize,
    closed: Vec<Option<Vec<bool>>>,
}

impl ClosureSchedule {
    pub fn all_open(patches: usize, weeks: usize) -> Self {
        Self { weeks, closed: vec![None; patches] }
    }

    /// Sets the closure flags of patch `p`; `flags.len()` must equal the
    /// schedule length.
    pub fn with_patch(mut self, p: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != self.weeks {
            return Err(Error::Shape { expected: self.weeks, got: flags.len() });
        }
        let slot = self.closed.get_mut(p).ok_or_else(|| Error::param(format!("patch {p} outside schedule")))?;
        *slot = Some(flags);
        Ok(self)
    }

    pub fn weeks(&self) -> usize {
        self.weeks
    }

    pub fn patches(&self) -> usize {
        self.closed.len()
    }

    pub fn is_closed(&self, p: usize, week: usize) -> bool {
        self.closed[p].as_ref().is_some_and(|f| f[week])
    }
}

/// A running meta-population model.
#[derive(Debug, Clone)]
pub struct Metapop {
    scenario: Arc<Scenario>,
    patches: Vec<PatchRuntime>,
    sim_rngs: Vec<StreamRng>,
    arrival_rngs: Vec<StreamRng>,
    closed: Vec<bool>,
    day: u32,
    steps_per_day: usize,
    parallel: bool,
    days: Vec<DayRecord>,
    weeks: Vec<WeekRecord>,
    initial_states: Vec<SeirState>,
}

impl Metapop {
    /// Fresh model seeded on day 0.
    pub fn new(scenario: Arc<Scenario>, seed: u64) -> Result<Self> {
        let params = scenario.params();
        let steps_per_day = params.steps_per_day()?;
        let mode = params.arrival_mode();
        let n = scenario.len();
        let sim_rngs = (0..n).map(|p| rng::stream(seed, Stream::Simulation, p as u64)).collect();
        let mut arrival_rngs: Vec<StreamRng> = (0..n).map(|p| rng::stream(seed, Stream::Arrivals, p as u64)).collect();
        let mut patches: Vec<PatchRuntime> = scenario
            .censuses()
            .iter()
            .zip(arrival_rngs.iter_mut())
            .map(|(c, r)| {
                let mut patch = PatchRuntime::new(SeirState::susceptible(c), mode.draw(r));
                patch.record_intensity(0.0);
                patch
            })
            .collect();
        if params.seed_infected > 0.0 {
            let index = &mut patches[params.seed_patch];
            index.state.infect(AgeGroup::Adults, params.seed_infected);
            index.infected = true;
            index.infection_day = Some(0);
            index.lambda_samples.clear();
        }
        let initial_states = patches.iter().map(|p| p.state).collect();
        let mut model = Self {
            scenario,
            patches,
            sim_rngs,
            arrival_rngs,
            closed: vec![false; n],
            day: 0,
            steps_per_day,
            parallel: true,
            days: Vec::new(),
            weeks: Vec::new(),
            initial_states,
        };
        model.days.push(model.day_record(0.0));
        Ok(model)
    }

    /// Enables or disables multi-threaded stepping (results are identical).
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn week(&self) -> usize {
        self.day as usize / 7
    }

    pub fn patches(&self) -> &[PatchRuntime] {
        &self.patches
    }

    pub fn patch(&self, p: usize) -> &PatchRuntime {
        &self.patches[p]
    }

    pub fn patch_mut(&mut self, p: usize) -> &mut PatchRuntime {
        &mut self.patches[p]
    }

    /// Schools in patch `p` closed (policy) from now on until changed.
    pub fn set_closed(&mut self, p: usize, closed: bool) {
        self.closed[p] = closed;
    }

    /// Whether patch `p` uses the holiday matrix this week.
    pub fn schools_closed(&self, p: usize) -> bool {
        self.closed[p] || self.scenario.params().is_holiday(self.week())
    }

    fn matrix(&self, p: usize) -> &ContactMatrix {
        self.scenario.contacts(p).get(self.schools_closed(p))
    }

    pub fn total_susceptible(&self) -> f64 {
        self.patches.iter().map(|p| p.state.total_susceptible()).sum()
    }

    /// Between-patch force of infection on patch `p` from the current state.
    pub fn patch_intensity(&self, p: usize) -> f64 {
        let sc = &self.scenario;
        let s_adults = self.patches[p].state.s[AgeGroup::Adults.index()];
        let sources = sc.inbound[p]
            .iter()
            .filter(|(o, _)| self.patches[*o].infected)
            .map(|&(o, w)| (w, self.patches[o].state.i[AgeGroup::Adults.index()], self.matrix(o).adult_adult()));
        between_patch_intensity(sc.epi.beta, sc.epi.mu, s_adults, sources)
    }

    /// Advances one day: infected patches step their SEIR dynamics, the
    /// arrival process is evaluated for every uninfected patch, and a
    /// trajectory row is appended.
    pub fn advance_day(&mut self) {
        let n = self.patches.len();
        let closed: Vec<bool> = (0..n).map(|p| self.schools_closed(p)).collect();
        let scenario = Arc::clone(&self.scenario);
        let sc = &*scenario;
        let steps = self.steps_per_day;
        let stochastic = sc.params.stochastic;

        let step = |(p, (patch, rng)): (usize, (&mut PatchRuntime, &mut StreamRng))| -> f64 {
            if !patch.infected {
                return 0.0;
            }
            let sp = StepParams { dt: sc.params.dt, params: &sc.epi, matrix: sc.contacts[p].get(closed[p]) };
            let mut new = 0.0;
            let mut state = patch.state;
            for _ in 0..steps {
                let (next, flows) = if stochastic {
                    intra_patch::step_with_noise(&state, &sp, || rng.sample(rand_distr::StandardNormal))
                } else {
                    intra_patch::step_with_noise(&state, &sp, || 0.0)
                };
                new += flows.new_infections();
                state = next;
            }
            patch.state = state;
            new
        };
        let mut new_infections = self.run_per_patch(step);

        let intensities: Vec<f64> =
            self.map_per_patch(|m, p| if m.patches[p].infected { 0.0 } else { m.patch_intensity(p) });

        self.day += 1;
        let mode = sc.params.arrival_mode();
        let inoculum = sc.params.import_inoculum;
        for (p, lambda) in intensities.into_iter().enumerate() {
            let patch = &mut self.patches[p];
            if patch.infected {
                continue;
            }
            patch.record_intensity(lambda);
            let before = patch.state.total_susceptible();
            if maybe_infect(patch, self.day, &mut self.arrival_rngs[p], mode, inoculum) {
                new_infections += before - patch.state.total_susceptible();
                patch.lambda_samples = Vec::new();
            }
        }
        let record = self.day_record(new_infections);
        self.days.push(record);
    }

    /// Seven days, logging the week's closures and susceptible loss.
    pub fn advance_week(&mut self) {
        let week = self.week() as u32;
        let closed = (0..self.patches.len()).map(|p| self.schools_closed(p)).collect();
        let before = self.total_susceptible();
        for _ in 0..7 {
            self.advance_day();
        }
        let reward = -(before - self.total_susceptible());
        self.weeks.push(WeekRecord { week, closed, reward });
    }

    fn run_per_patch<F>(&mut self, f: F) -> f64
    where
        F: Fn((usize, (&mut PatchRuntime, &mut StreamRng))) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.parallel && self.patches.len() >= PARALLEL_MIN_PATCHES {
            let per: Vec<f64> =
                self.patches.par_iter_mut().zip(self.sim_rngs.par_iter_mut()).enumerate().map(&f).collect();
            return per.iter().sum();
        }
        self.patches.iter_mut().zip(self.sim_rngs.iter_mut()).enumerate().map(f).sum()
    }

    fn map_per_patch<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&Self, usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.parallel && self.patches.len() >= PARALLEL_MIN_PATCHES {
            return (0..self.patches.len()).into_par_iter().map(|p| f(self, p)).collect();
        }
        (0..self.patches.len()).map(|p| f(self, p)).collect()
    }

    fn day_record(&self, new_infections: f64) -> DayRecord {
        let mut totals = SeirState::default();
        for p in &self.patches {
            for g in 0..crate::types::GROUPS {
                totals.s[g] += p.state.s[g];
                totals.e[g] += p.state.e[g];
                totals.i[g] += p.state.i[g];
                totals.r[g] += p.state.r[g];
            }
        }
        DayRecord {
            day: self.day,
            totals,
            new_infections,
            infected_patches: self.patches.iter().filter(|p| p.infected).count(),
        }
    }

    pub fn into_trajectory(self) -> Trajectory {
        let initial_susceptible = self.initial_states.iter().map(|s| s.total_susceptible()).sum();
        Trajectory {
            patch_ids: self.scenario.censuses().iter().map(|c| c.district_id.clone()).collect(),
            population: self.scenario.population(),
            initial_susceptible,
            days: self.days,
            weeks: self.weeks,
            infection_day: self.patches.iter().map(|p| p.infection_day).collect(),
            initial_states: self.initial_states,
            final_states: self.patches.iter().map(|p| p.state).collect(),
        }
    }
}

/// Runs a full episode under a fixed closure schedule.
pub fn simulate(scenario: &Arc<Scenario>, schedule: &ClosureSchedule, seed: u64) -> Result<Trajectory> {
    simulate_with(scenario, schedule, seed, true)
}

/// As [`simulate`], optionally forcing single-threaded stepping.
pub fn simulate_with(
    scenario: &Arc<Scenario>,
    schedule: &ClosureSchedule,
    seed: u64,
    parallel: bool,
) -> Result<Trajectory> {
    let horizon = scenario.params().horizon_weeks;
    if schedule.weeks() != horizon {
        return Err(Error::Shape { expected: horizon, got: schedule.weeks() });
    }
    if schedule.patches() != scenario.len() {
        return Err(Error::Shape { expected: scenario.len(), got: schedule.patches() });
    }
    let mut model = Metapop::new(Arc::clone(scenario), seed)?;
    model.set_parallel(parallel);
    for week in 0..horizon {
        for p in 0..scenario.len() {
            model.set_closed(p, schedule.is_closed(p, week));
        }
        model.advance_week();
    }
    Ok(model.into_trajectory())
}
