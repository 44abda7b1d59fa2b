use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{AgeGroup, SeirState, GROUPS};

/// End-of-day totals over all patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: u32,
    /// Summed compartments in S, E, I, R blocks by age group.
    pub totals: SeirState,
    /// Persons newly exposed during the day, imports included.
    pub new_infections: f64,
    pub infected_patches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekRecord {
    pub week: u32,
    /// Closure flag applied to every patch during the week.
    pub closed: Vec<bool>,
    /// Negative susceptible loss over the week, all patches.
    pub reward: f64,
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub patch_ids: Vec<String>,
    pub population: f64,
    /// Total susceptibles right after the day-0 seeding.
    pub initial_susceptible: f64,
    pub days: Vec<DayRecord>,
    pub weeks: Vec<WeekRecord>,
    pub infection_day: Vec<Option<u32>>,
    pub initial_states: Vec<SeirState>,
    pub final_states: Vec<SeirState>,
}

/// Run-level summary written next to the daily CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub attack_rate: f64,
    pub peak_day: u32,
    pub peak_incidence: f64,
    pub infection_day: Vec<(String, Option<u32>)>,
    pub total_reward: f64,
}

impl Trajectory {
    pub fn final_susceptible(&self) -> f64 {
        self.final_states.iter().map(|s| s.total_susceptible()).sum()
    }

    /// Fraction of the population infected after seeding.
    pub fn attack_rate(&self) -> f64 {
        (self.initial_susceptible - self.final_susceptible()) / self.population
    }

    /// Attack rate of a single patch.
    pub fn patch_attack_rate(&self, p: usize) -> f64 {
        let s0 = self.initial_states[p].total_susceptible();
        (s0 - self.final_states[p].total_susceptible()) / self.initial_states[p].population()
    }

    pub fn incidence(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.new_infections).collect()
    }

    /// Day with the largest incidence (earliest on ties) and that incidence.
    pub fn peak(&self) -> (u32, f64) {
        self.days
            .iter()
            .fold((0, 0.0), |best, d| if d.new_infections > best.1 { (d.day, d.new_infections) } else { best })
    }

    pub fn total_reward(&self) -> f64 {
        self.weeks.iter().map(|w| w.reward).sum()
    }

    pub fn summary(&self) -> RunSummary {
        let (peak_day, peak_incidence) = self.peak();
        RunSummary {
            attack_rate: self.attack_rate(),
            peak_day,
            peak_incidence,
            infection_day: self.patch_ids.iter().cloned().zip(self.infection_day.iter().copied()).collect(),
            total_reward: self.total_reward(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["day".to_string()];
        for c in ["S", "E", "I", "R"] {
            for g in AgeGroup::ALL {
                header.push(format!("{c}_{}", g.name()));
            }
        }
        header.push("new_infections".into());
        header.push("infected_patches".into());
        w.write_record(&header)?;
        for d in &self.days {
            let mut row = Vec::with_capacity(4 * GROUPS + 3);
            row.push(d.day.to_string());
            row.extend(d.totals.flatten().iter().map(|v| v.to_string()));
            row.push(d.new_infections.to_string());
            row.push(d.infected_patches.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Trajectory {
        let mk = |s| SeirState { s: [s, 0.0, 0.0, 0.0], r: [100.0 - s, 0.0, 0.0, 0.0], ..Default::default() };
        Trajectory {
            patch_ids: vec!["a".into()],
            population: 100.0,
            initial_susceptible: 90.0,
            days: (0..3)
                .map(|d| DayRecord {
                    day: d,
                    totals: mk(90.0),
                    new_infections: [1.0, 5.0, 5.0][d as usize],
                    infected_patches: 1,
                })
                .collect(),
            weeks: vec![WeekRecord { week: 0, closed: vec![false], reward: -20.0 }],
            infection_day: vec![Some(0)],
            initial_states: vec![mk(90.0)],
            final_states: vec![mk(70.0)],
        }
    }

    #[test]
    fn summary_values() {
        let t = toy();
        assert!((t.attack_rate() - 0.2).abs() < 1e-15);
        assert_eq!(t.peak(), (1, 5.0));
        let s = t.summary();
        assert_eq!(s.total_reward, -20.0);
        assert_eq!(s.infection_day, vec![("a".to_string(), Some(0))]);
    }

    #[test]
    fn csv_has_one_row_per_day() {
        let mut buf = Vec::new();
        toy().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("day,S_children,S_adolescents"));
    }
}
