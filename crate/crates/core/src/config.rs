//! Experiment configuration files.
//!
//! A configuration is a JSON object. `data` is either
//! `{"files": {"census": ..., "mobility": ..., "contacts": ...}}` or
//! `{"synthetic": {...generator settings...}}`; everything else has
//! defaults. Relative paths are resolved against the directory of the
//! configuration file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::census::{map_nomis_to_eames, NomisCensusRow};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::metapop::{MobilityMatrix, ModelParams, Scenario};
use crate::network::{build_commute_graph, detect_communities};
use crate::ppo::PpoHyper;
use crate::synth::{self, SynthSpec};
use crate::types::{Census, ContactPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Files {
        census: PathBuf,
        /// Absent for a single district without commuting.
        #[serde(default)]
        mobility: Option<PathBuf>,
        /// Absent: the built-in synthetic term/holiday pair.
        #[serde(default)]
        contacts: Option<PathBuf>,
    },
    Synthetic(SynthSpec),
}

/// Which districts the agent controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Controlled {
    /// The index district only.
    SeedDistrict,
    Districts(Vec<String>),
    /// A community of the commute graph, by community number.
    Community(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub model: ModelParams,
    /// District where the epidemic starts; overrides `model.seed_patch`.
    #[serde(default)]
    pub seed_district: Option<String>,
    /// Restrict the model to these districts (in this order).
    #[serde(default)]
    pub districts: Option<Vec<String>>,
    #[serde(default = "default_controlled")]
    pub controlled: Controlled,
    #[serde(default = "default_budget")]
    pub budget_weeks: u32,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ppo: PpoHyper,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eval_runs")]
    pub eval_runs: usize,
    #[serde(default = "default_gt_weeks")]
    pub ground_truth_weeks: usize,
}

fn default_controlled() -> Controlled {
    Controlled::SeedDistrict
}
fn default_budget() -> u32 {
    6
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_episodes() -> usize {
    10_000
}
fn default_trials() -> usize {
    5
}
fn default_eval_runs() -> usize {
    1000
}
fn default_gt_weeks() -> usize {
    25
}

/// Census rows, mobility and contacts as read from disk or generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub nomis: Vec<NomisCensusRow>,
    pub censuses: Vec<Census>,
    pub mobility: MobilityMatrix,
    pub contacts: ContactPair,
}

impl Dataset {
    pub fn from_rows(
        nomis: Vec<NomisCensusRow>,
        mobility: Option<MobilityMatrix>,
        contacts: ContactPair,
    ) -> Result<Self> {
        let censuses = nomis.iter().map(|r| map_nomis_to_eames(r).map(|m| m.census)).collect::<Result<Vec<_>>>()?;
        let ids: Vec<String> = censuses.iter().map(|c| c.district_id.clone()).collect();
        let mobility = match mobility {
            None if censuses.len() == 1 => MobilityMatrix::zeros(ids),
            None => return Err(Error::config("a mobility file is required for more than one district")),
            Some(m) => {
                let order = ids
                    .iter()
                    .map(|id| {
                        m.ids()
                            .iter()
                            .position(|x| x == id)
                            .ok_or_else(|| Error::data(format!("district {id} missing from mobility")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                m.subset(&order)
            }
        };
        Ok(Self { nomis, censuses, mobility, contacts })
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.censuses
            .iter()
            .position(|c| c.district_id == id)
            .ok_or_else(|| Error::config(format!("unknown district {id:?}")))
    }
}

impl ExperimentConfig {
    pub fn synthetic(spec: SynthSpec) -> Self {
        serde_json::from_value(serde_json::json!({ "data": { "synthetic": spec } })).expect("defaults are valid")
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("configuration: {e}")))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Files { census, mobility, contacts } = &mut self.data {
            fix(census);
            mobility.iter_mut().for_each(fix);
            contacts.iter_mut().for_each(fix);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        for (name, v) in [("r0", m.r0), ("gamma", m.gamma), ("zeta", m.zeta), ("dt", m.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        m.steps_per_day()?;
        self.ppo.validate()?;
        if self.budget_weeks as usize > m.horizon_weeks {
            return Err(Error::config("budget exceeds the horizon"));
        }
        Ok(())
    }

    pub fn load_data(&self) -> Result<Dataset> {
        match &self.data {
            DataSource::Synthetic(spec) => {
                let d = synth::generate(spec)?;
                Ok(Dataset { nomis: d.nomis, censuses: d.censuses, mobility: d.mobility, contacts: d.contacts })
            }
            DataSource::Files { census, mobility, contacts } => {
                let nomis = io::read_census(io::open(census)?)?;
                let mobility = mobility.as_ref().map(|p| io::read_mobility(io::open(p)?)).transpose()?;
                let contacts = match contacts {
                    Some(p) => io::read_contact_pair(p)?,
                    None => synth::contact_pair(),
                };
                Dataset::from_rows(nomis, mobility, contacts)
            }
        }
    }

    /// Model parameters with the seed district resolved against `data`.
    pub fn model_params(&self, data: &Dataset) -> Result<ModelParams> {
        let mut params = self.model.clone();
        if let Some(id) = &self.seed_district {
            params.seed_patch = data.index_of(id)?;
        }
        Ok(params)
    }

    pub fn scenario(&self, data: &Dataset) -> Result<Scenario> {
        let mut params = self.model_params(data)?;
        let full = |params| Scenario::new(data.censuses.clone(), data.mobility.clone(), &data.contacts, params);
        match &self.districts {
            None => full(params),
            Some(ids) => {
                let keep = ids.iter().map(|id| data.index_of(id)).collect::<Result<Vec<_>>>()?;
                params.seed_patch = keep
                    .iter()
                    .position(|&k| k == params.seed_patch)
                    .ok_or_else(|| Error::config("seed district is not among the modelled districts"))?;
                let base = full(ModelParams { seed_patch: 0, ..params.clone() })?;
                base.subset(&keep, params)
            }
        }
    }

    /// Patch indices of the controlled districts.
    pub fn controlled_patches(&self, scenario: &Scenario) -> Result<Vec<usize>> {
        match &self.controlled {
            Controlled::SeedDistrict => Ok(vec![scenario.params().seed_patch]),
            Controlled::Districts(ids) => ids
                .iter()
                .map(|id| scenario.patch_index(id).ok_or_else(|| Error::config(format!("unknown district {id:?}"))))
                .collect(),
            Controlled::Community(c) => {
                let partition = detect_communities(&build_commute_graph(scenario.mobility()), self.seed)?;
                let members = partition.members(*c);
                if members.is_empty() {
                    return Err(Error::config(format!("community {c} does not exist ({} found)", partition.count())));
                }
                Ok(members)
            }
        }
    }

    pub fn env_config(&self, scenario: Arc<Scenario>) -> Result<EnvConfig> {
        let controlled = self.controlled_patches(&scenario)?;
        EnvConfig::new(scenario, controlled, self.budget_weeks)
    }
}
