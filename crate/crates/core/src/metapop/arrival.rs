//! Patch infection as a non-homogeneous Poisson process.
//!
//! The intensity of an uninfected patch is sampled once per day and linearly
//! interpolated between samples. An arrival fires on the first day `t` at
//! which the cumulative intensity `Lambda(t)` reaches a threshold built from
//! unit-rate exponential draws.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::types::{AgeGroup, SeirState};

/// How arrival thresholds are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrivalMode {
    /// Unit-rate exponential increments.
    Stochastic,
    /// Every increment equals its expectation, 1.
    Expected,
}

impl ArrivalMode {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ArrivalMode::Stochastic => rng.sample(Exp1),
            ArrivalMode::Expected => 1.0,
        }
    }
}

/// Between-patch force of infection on a receiving patch with `s_adults`
/// susceptible adults. `sources` yields `(flux, infectious adults,
/// adult-adult contacts)` for each infected neighbour.
pub fn between_patch_intensity(
    beta: f64,
    mu: f64,
    s_adults: f64,
    sources: impl IntoIterator<Item = (f64, f64, f64)>,
) -> f64 {
    let potential: f64 = sources.into_iter().map(|(flux, i_adults, m_aa)| flux * i_adults * m_aa).sum();
    if potential == 0.0 {
        return 0.0;
    }
    beta * s_adults.max(0.0).powf(mu) * potential
}

/// Trapezoid integral of the piecewise-linear intensity through the daily
/// samples `samples[0..=t]`, where `samples[k]` is the intensity at the end
/// of day `k`.
///
/// # Panics
///
/// If fewer than `t + 1` samples are given.
pub fn cumulative_intensity(samples: &[f64], t: usize) -> f64 {
    assert!(samples.len() > t, "intensity samples cover days 0..{}, asked for day {t}", samples.len());
    samples[..=t].windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
}

/// Runtime state of one patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRuntime {
    pub state: SeirState,
    pub infected: bool,
    pub infection_day: Option<u32>,
    /// Running sum of exponential draws; the next arrival fires when the
    /// cumulative intensity reaches it.
    pub threshold: f64,
    /// End-of-day intensity samples while uninfected.
    pub lambda_samples: Vec<f64>,
    /// Cumulative intensity at the last sample.
    pub cumulative: f64,
    pub budget_remaining: u32,
}

impl PatchRuntime {
    pub fn new(state: SeirState, threshold: f64) -> Self {
        Self {
            state,
            infected: false,
            infection_day: None,
            threshold,
            lambda_samples: Vec::new(),
            cumulative: 0.0,
            budget_remaining: 0,
        }
    }

    /// Appends the end-of-day intensity and advances the cumulative intensity.
    pub fn record_intensity(&mut self, lambda: f64) {
        if let Some(&prev) = self.lambda_samples.last() {
            self.cumulative += 0.5 * (prev + lambda);
        }
        self.lambda_samples.push(lambda);
    }
}

/// Fires the arrival for an uninfected patch once its cumulative intensity
/// has reached the threshold: the patch is marked infected on `day`,
/// `inoculum` susceptible adults become exposed and the next exponential
/// increment is drawn.
pub fn maybe_infect<R: Rng + ?Sized>(
    patch: &mut PatchRuntime,
    day: u32,
    rng: &mut R,
    mode: ArrivalMode,
    inoculum: f64,
) -> bool {
    if patch.infected || patch.cumulative < patch.threshold {
        return false;
    }
    patch.infected = true;
    patch.infection_day = Some(day);
    patch.state.expose(AgeGroup::Adults, inoculum);
    patch.threshold += mode.draw(rng);
    true
}
