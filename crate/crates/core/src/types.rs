//! Domain types shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reproduction;

/// Number of age groups in the model.
pub const GROUPS: usize = 4;

/// The four age groups of the contact survey, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeGroup {
    /// 0–4 years.
    Children = 0,
    /// 5–18 years.
    Adolescents = 1,
    /// 19–64 years.
    Adults = 2,
    /// 65 years and older.
    Elderly = 3,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; GROUPS] =
        [AgeGroup::Children, AgeGroup::Adolescents, AgeGroup::Adults, AgeGroup::Elderly];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AgeGroup::Children => "children",
            AgeGroup::Adolescents => "adolescents",
            AgeGroup::Adults => "adults",
            AgeGroup::Elderly => "elderly",
        }
    }
}

/// Whether a contact matrix describes school term or school holiday mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixLabel {
    Term,
    Holiday,
}

/// Mean daily contacts of a row-group individual with column-group
/// individuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMatrix {
    entries: [[f64; GROUPS]; GROUPS],
    label: MatrixLabel,
}

impl ContactMatrix {
    pub fn new(entries: [[f64; GROUPS]; GROUPS], label: MatrixLabel) -> Result<Self> {
        for row in &entries {
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::param(format!(
                        "contact matrix entries must be finite and non-negative, got {v}"
                    )));
                }
            }
        }
        Ok(Self { entries, label })
    }

    pub fn identity(label: MatrixLabel) -> Self {
        let mut entries = [[0.0; GROUPS]; GROUPS];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { entries, label }
    }

    #[inline]
    pub fn entries(&self) -> &[[f64; GROUPS]; GROUPS] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: AgeGroup, col: AgeGroup) -> f64 {
        self.entries[row.index()][col.index()]
    }

    pub fn label(&self) -> MatrixLabel {
        self.label
    }

    /// Adult–adult contact rate, the infectious potential multiplier of the
    /// inter-patch coupling.
    #[inline]
    pub fn adult_adult(&self) -> f64 {
        self.entries[AgeGroup::Adults.index()][AgeGroup::Adults.index()]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut entries = self.entries;
        entries.iter_mut().flatten().for_each(|v| *v *= factor);
        Self::new(entries, self.label)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        reproduction::spectral_radius(&self.entries)
    }
}

/// Term and holiday matrices for one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPair {
    pub term: ContactMatrix,
    pub holiday: ContactMatrix,
}

impl ContactPair {
    pub fn get(&self, schools_closed: bool) -> &ContactMatrix {
        if schools_closed {
            &self.holiday
        } else {
            &self.term
        }
    }

    /// Reciprocity-corrected copy of both matrices for `census`.
    pub fn reciprocal_for(&self, census: &Census) -> Result<Self> {
        Ok(Self {
            term: reproduction::make_reciprocal(&self.term, census)?,
            holiday: reproduction::make_reciprocal(&self.holiday, census)?,
        })
    }
}

/// Persons per age group in one district.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub district_id: String,
    pub counts: [f64; GROUPS],
}

impl Census {
    pub fn new(district_id: impl Into<String>, counts: [f64; GROUPS]) -> Result<Self> {
        let district_id = district_id.into();
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::data(format!("census {district_id}: counts must be non-negative")));
        }
        if counts.iter().sum::<f64>() <= 0.0 {
            return Err(Error::data(format!("census {district_id}: empty population")));
        }
        Ok(Self { district_id, counts })
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Sum of several censuses, used for the model-wide reciprocity correction.
    pub fn aggregate<'a>(id: &str, parts: impl IntoIterator<Item = &'a Census>) -> Result<Self> {
        let mut counts = [0.0; GROUPS];
        for c in parts {
            for g in 0..GROUPS {
                counts[g] += c.counts[g];
            }
        }
        Self::new(id, counts)
    }
}

/// Epidemiological parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    pub r0: f64,
    /// Transmission probability per contact.
    pub beta: f64,
    /// Recovery rate, 1/day.
    pub gamma: f64,
    /// Latency rate, 1/day.
    pub zeta: f64,
    /// Exponent on the receiving patch's susceptible adults.
    pub mu: f64,
    pub mu_scale: f64,
}

impl EpiParams {
    /// Derives `beta` from `r0` on `matrix` and `mu` from `r0` and `mu_scale`
    /// (or uses `mu_override` when given).
    pub fn from_r0(
        matrix: &ContactMatrix,
        r0: f64,
        gamma: f64,
        zeta: f64,
        mu_scale: f64,
        mu_override: Option<f64>,
    ) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::param("zeta must be positive"));
        }
        let beta = reproduction::beta_for_r0(matrix, gamma, r0)?;
        if beta > 1.0 {
            return Err(Error::param(format!("R0 = {r0} needs beta = {beta:.4} > 1 on this contact matrix")));
        }
        let mu = match mu_override {
            Some(mu) if (0.0..=1.0).contains(&mu) => mu,
            Some(mu) => return Err(Error::param(format!("mu must lie in [0, 1], got {mu}"))),
            None => crate::metapop::calibrate_mu(r0, mu_scale)?,
        };
        Ok(Self { r0, beta, gamma, zeta, mu, mu_scale })
    }
}

/// SEIR compartments per age group. Values are continuous.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SeirState {
    pub s: [f64; GROUPS],
    pub e: [f64; GROUPS],
    pub i: [f64; GROUPS],
    pub r: [f64; GROUPS],
}

impl SeirState {
    /// Fully susceptible population.
    pub fn susceptible(census: &Census) -> Self {
        Self { s: census.counts, ..Self::default() }
    }

    #[inline]
    pub fn group_population(&self, g: usize) -> f64 {
        self.s[g] + self.e[g] + self.i[g] + self.r[g]
    }

    pub fn population(&self) -> f64 {
        (0..GROUPS).map(|g| self.group_population(g)).sum()
    }

    #[inline]
    pub fn total_susceptible(&self) -> f64 {
        self.s.iter().sum()
    }

    pub fn total_exposed(&self) -> f64 {
        self.e.iter().sum()
    }

    pub fn total_infected(&self) -> f64 {
        self.i.iter().sum()
    }

    pub fn total_recovered(&self) -> f64 {
        self.r.iter().sum()
    }

    pub fn is_disease_free(&self) -> bool {
        self.e.iter().chain(self.i.iter()).all(|&v| v == 0.0)
    }

    /// Moves up to `amount` persons of group `g` from S to I.
    pub fn infect(&mut self, g: AgeGroup, amount: f64) -> f64 {
        let moved = amount.clamp(0.0, self.s[g.index()]);
        self.s[g.index()] -= moved;
        self.i[g.index()] += moved;
        moved
    }

    /// Moves up to `amount` persons of group `g` from S to E.
    pub fn expose(&mut self, g: AgeGroup, amount: f64) -> f64 {
        let moved = amount.clamp(0.0, self.s[g.index()]);
        self.s[g.index()] -= moved;
        self.e[g.index()] += moved;
        moved
    }

    /// The 16 compartment values in S, E, I, R blocks of four age groups.
    pub fn flatten(&self) -> [f64; 4 * GROUPS] {
        let mut out = [0.0; 4 * GROUPS];
        out[0..4].copy_from_slice(&self.s);
        out[4..8].copy_from_slice(&self.e);
        out[8..12].copy_from_slice(&self.i);
        out[12..16].copy_from_slice(&self.r);
        out
    }

    pub fn is_valid(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}
