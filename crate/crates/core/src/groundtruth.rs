//! Optimal closure schedules for one district by exhaustive search.
//!
//! A schedule over `w` weeks is a bit string with `1` = schools open and
//! `0` = closed; every string with at most `b` zeros is evaluated on the
//! deterministic model and the lowest attack rate wins.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intra_patch::{self, StepParams};
use crate::metapop::Scenario;
use crate::types::{AgeGroup, SeirState};

/// Weekly open/closed flags; bit `k` is week `k`, set = open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryPolicy {
    bits: u64,
    weeks: usize,
}

impl BinaryPolicy {
    pub fn all_open(weeks: usize) -> Self {
        Self { bits: full_mask(weeks), weeks }
    }

    pub fn from_closed_weeks(weeks: usize, closed: &[usize]) -> Result<Self> {
        let mut p = Self::all_open(weeks);
        for &w in closed {
            if w >= weeks {
                return Err(Error::param(format!("week {w} outside a {weeks}-week policy")));
            }
            p.bits &= !(1 << w);
        }
        Ok(p)
    }

    pub fn weeks(&self) -> usize {
        self.weeks
    }

    pub fn is_open(&self, week: usize) -> bool {
        week >= self.weeks || self.bits >> week & 1 == 1
    }

    pub fn closures(&self) -> u32 {
        self.weeks as u32 - self.bits.count_ones()
    }

    /// Closed flags over `horizon` weeks; weeks past the policy are open.
    pub fn closed_flags(&self, horizon: usize) -> Vec<bool> {
        (0..horizon).map(|w| !self.is_open(w)).collect()
    }

    /// Order used to break ties: fewer closures first, then the smaller bit
    /// string read from week 0.
    fn tie_order(&self, other: &Self) -> Ordering {
        self.closures().cmp(&other.closures()).then_with(|| {
            let diff = self.bits ^ other.bits;
            if diff == 0 {
                Ordering::Equal
            } else if self.bits >> diff.trailing_zeros() & 1 == 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
    }
}

impl fmt::Display for BinaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in 0..self.weeks {
            f.write_str(if self.is_open(w) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BinaryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(Error::param("policies are limited to 64 weeks"));
        }
        let mut bits = 0u64;
        for (w, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << w,
                '0' => {}
                _ => return Err(Error::param(format!("policy string has {c:?}, expected 0 or 1"))),
            }
        }
        Ok(Self { bits, weeks: s.len() })
    }
}

fn full_mask(weeks: usize) -> u64 {
    if weeks == 64 {
        u64::MAX
    } else {
        (1u64 << weeks) - 1
    }
}

/// Every `w`-week policy with at most `b` closures, ordered by closure count.
pub fn enumerate_policies(w: usize, b: usize) -> Result<impl Iterator<Item = BinaryPolicy>> {
    if w > 64 {
        return Err(Error::param(format!("cannot enumerate {w}-week policies (limit 64)")));
    }
    if b > w {
        return Err(Error::param(format!("budget {b} exceeds {w} weeks")));
    }
    let full = full_mask(w);
    Ok((0..=b)
        .flat_map(move |k| Combinations::new(w, k).map(move |zeros| BinaryPolicy { bits: full & !zeros, weeks: w })))
}

/// `sum_{k <= b} C(w, k)`.
pub fn policy_count(w: usize, b: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for k in 0..=b.min(w) {
        total += c;
        c = c * (w - k) as u128 / (k + 1) as u128;
    }
    total
}

/// `k`-subsets of `0..n` as bit masks in increasing numeric order (Gosper's
/// hack).
struct Combinations {
    next: Option<u64>,
    limit: u64,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let first = if k == 0 { 0 } else { full_mask(k) };
        Self { next: Some(first), limit: full_mask(n) }
    }
}

impl Iterator for Combinations {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur.wrapping_add(c);
            let nxt = if r == 0 { None } else { Some((((r ^ cur) >> 2) / c) | r) };
            nxt.filter(|&v| v & !self.limit == 0)
        };
        Some(cur)
    }
}

/// Attack rate of the deterministic single-district model under `policy`.
pub fn evaluate_deterministic(scenario: &Scenario, policy: &BinaryPolicy) -> Result<f64> {
    if scenario.len() != 1 {
        return Err(Error::config("ground truth is defined for single-district models only"));
    }
    if scenario.params().stochastic {
        return Err(Error::config("ground truth needs the deterministic model"));
    }
    let params = scenario.params();
    let steps = params.steps_per_day()?;
    let census = &scenario.censuses()[0];
    let mut state = SeirState::susceptible(census);
    state.infect(AgeGroup::Adults, params.seed_infected);
    let s0 = state.total_susceptible();
    let pair = scenario.contacts(0);
    let term = StepParams::new(params.dt, scenario.epi(), &pair.term)?;
    let holiday = StepParams::new(params.dt, scenario.epi(), &pair.holiday)?;
    for week in 0..params.horizon_weeks {
        let sp = if !policy.is_open(week) || params.is_holiday(week) { &holiday } else { &term };
        for _ in 0..7 * steps {
            state = intra_patch::step_with_noise(&state, sp, || 0.0).0;
        }
    }
    Ok((s0 - state.total_susceptible()) / census.total())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub weeks: usize,
    pub budget: usize,
    pub best_policy: String,
    pub closed_weeks: Vec<usize>,
    pub best_attack_rate: f64,
    pub baseline_attack_rate: f64,
    pub improvement: f64,
    pub evaluated: usize,
}

/// Exhaustive search; `table` receives every evaluated policy when given.
pub fn exhaustive_search(
    scenario: &Scenario,
    w: usize,
    b: usize,
    table: Option<&mut Vec<(BinaryPolicy, f64)>>,
) -> Result<SearchResult> {
    if w > scenario.params().horizon_weeks {
        return Err(Error::param(format!("policy of {w} weeks exceeds the horizon")));
    }
    let policies: Vec<BinaryPolicy> = enumerate_policies(w, b)?.collect();
    #[cfg(feature = "parallel")]
    let iter = policies.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = policies.iter();
    let values: Vec<f64> = iter.map(|p| evaluate_deterministic(scenario, p)).collect::<Result<_>>()?;
    let mut best = 0;
    for k in 1..policies.len() {
        let better = match values[k].total_cmp(&values[best]) {
            Ordering::Less => true,
            Ordering::Equal => policies[k].tie_order(&policies[best]) == Ordering::Less,
            Ordering::Greater => false,
        };
        if better {
            best = k;
        }
    }
    debug_assert!(values.iter().all(|v| *v >= values[best]));
    let baseline = evaluate_deterministic(scenario, &BinaryPolicy::all_open(w))?;
    let p = policies[best];
    if let Some(t) = table {
        t.extend(policies.iter().copied().zip(values.iter().copied()));
    }
    Ok(SearchResult {
        weeks: w,
        budget: b,
        best_policy: p.to_string(),
        closed_weeks: (0..w).filter(|&k| !p.is_open(k)).collect(),
        best_attack_rate: values[best],
        baseline_attack_rate: baseline,
        improvement: baseline - values[best],
        evaluated: policies.len(),
    })
}

/// CSV table of policies and attack rates.
pub fn write_table<W: Write>(table: &[(BinaryPolicy, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "closures", "attack_rate"])?;
    for (p, ar) in table {
        w.write_record([p.to_string(), p.closures().to_string(), ar.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
