//! One district's age-structured SEIR model.
//!
//! Flows between compartments are computed from the pre-step state, clamped
//! to their source compartment and applied simultaneously, so every step
//! conserves each age group's population and keeps all compartments
//! non-negative. The stochastic step adds chemical-Langevin noise to each
//! transition flow: `a*dt + sqrt(a*dt) * Z` for a transition with rate `a`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{ContactMatrix, ContactPair, EpiParams, SeirState, GROUPS};

/// Integrator settings for one step.
#[derive(Debug, Clone, Copy)]
pub struct StepParams<'a> {
    pub dt: f64,
    pub params: &'a EpiParams,
    /// Reciprocity-corrected matrix in force for this step.
    pub matrix: &'a ContactMatrix,
}

impl<'a> StepParams<'a> {
    pub fn new(dt: f64, params: &'a EpiParams, matrix: &'a ContactMatrix) -> Result<Self> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::param(format!("dt must lie in (0, 1], got {dt}")));
        }
        Ok(Self { dt, params, matrix })
    }
}

/// Realised transition amounts of one step, per age group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Flows {
    pub s_to_e: [f64; GROUPS],
    pub e_to_i: [f64; GROUPS],
    pub i_to_r: [f64; GROUPS],
}

impl Flows {
    pub fn new_infections(&self) -> f64 {
        self.s_to_e.iter().sum()
    }
}

/// Age-specific force of infection `phi_i = sum_j beta M_ij I_j / N_j`.
pub fn force_of_infection(state: &SeirState, matrix: &ContactMatrix, beta: f64) -> Result<[f64; GROUPS]> {
    for g in 0..GROUPS {
        if !(state.group_population(g) > 0.0) {
            return Err(Error::EmptyAgeGroup(g));
        }
    }
    Ok(foi(state, matrix, beta))
}

/// Force of infection with empty groups contributing nothing.
#[inline]
fn foi(state: &SeirState, matrix: &ContactMatrix, beta: f64) -> [f64; GROUPS] {
    let mut prevalence = [0.0; GROUPS];
    for (j, p) in prevalence.iter_mut().enumerate() {
        let n = state.group_population(j);
        if n > 0.0 {
            *p = state.i[j] / n;
        }
    }
    let m = matrix.entries();
    let mut phi = [0.0; GROUPS];
    for i in 0..GROUPS {
        let mut acc = 0.0;
        for j in 0..GROUPS {
            acc += m[i][j] * prevalence[j];
        }
        phi[i] = beta * acc;
    }
    phi
}

/// One step with explicit noise draws; `noise` is called three times per age
/// group (S→E, E→I, I→R), in group order, whether or not the flow is zero.
pub fn step_with_noise(state: &SeirState, sp: &StepParams<'_>, mut noise: impl FnMut() -> f64) -> (SeirState, Flows) {
    let phi = foi(state, sp.matrix, sp.params.beta);
    let dt = sp.dt;
    let mut flows = Flows::default();
    for g in 0..GROUPS {
        flows.s_to_e[g] = noisy_flow(phi[g] * state.s[g], dt, noise(), state.s[g]);
        flows.e_to_i[g] = noisy_flow(sp.params.zeta * state.e[g], dt, noise(), state.e[g]);
        flows.i_to_r[g] = noisy_flow(sp.params.gamma * state.i[g], dt, noise(), state.i[g]);
    }
    let mut next = *state;
    for g in 0..GROUPS {
        next.s[g] -= flows.s_to_e[g];
        next.e[g] += flows.s_to_e[g] - flows.e_to_i[g];
        next.i[g] += flows.e_to_i[g] - flows.i_to_r[g];
        next.r[g] += flows.i_to_r[g];
    }
    (next, flows)
}

#[inline]
fn noisy_flow(rate: f64, dt: f64, z: f64, source: f64) -> f64 {
    let mean = rate * dt;
    let raw = if z == 0.0 { mean } else { mean + (mean.max(0.0)).sqrt() * z };
    raw.clamp(0.0, source)
}

/// Explicit Euler step of the SEIR ODEs.
pub fn step_deterministic(state: &SeirState, sp: &StepParams<'_>) -> SeirState {
    step_with_noise(state, sp, || 0.0).0
}

/// Euler–Maruyama step with independent standard normal draws per transition.
pub fn step_stochastic<R: Rng + ?Sized>(state: &SeirState, sp: &StepParams<'_>, rng: &mut R) -> SeirState {
    step_with_noise(state, sp, || rng.sample(StandardNormal)).0
}

/// Contact matrix for `week`: holiday when schools are closed that week.
pub fn matrix_for_week<'a>(pair: &'a ContactPair, closed: &[bool], week: usize) -> Result<&'a ContactMatrix> {
    closed
        .get(week)
        .map(|&c| pair.get(c))
        .ok_or_else(|| Error::param(format!("week {week} outside a {}-week schedule", closed.len())))
}
