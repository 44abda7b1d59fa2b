//! Synthetic districts, commuting and contact matrices.
//!
//! Age structures are Dirichlet draws around a fixed UK-like census pyramid,
//! populations are log-normal, and commuting follows a production-constrained
//! gravity model kept sparse by linking every district only to its strongest
//! few destinations.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::census::{map_nomis_to_eames, NomisCensusRow};
use crate::error::{Error, Result};
use crate::io;
use crate::metapop::MobilityMatrix;
use crate::rng::{self, Stream};
use crate::types::{Census, ContactMatrix, ContactPair, MatrixLabel};

/// Share of each census band in the reference pyramid.
const PYRAMID: [f64; 16] =
    [0.062, 0.035, 0.023, 0.057, 0.012, 0.024, 0.025, 0.065, 0.068, 0.205, 0.190, 0.060, 0.085, 0.055, 0.015, 0.008];

/// Term-time contacts per day (row group meets column group): children,
/// adolescents, adults, elderly.
const TERM: [[f64; 4]; 4] = [[2.0, 1.5, 3.0, 0.4], [0.6, 8.0, 3.5, 0.4], [0.5, 1.5, 6.0, 0.8], [0.3, 0.6, 3.0, 2.0]];

/// Holiday contacts: school mixing among children and adolescents mostly
/// disappears and adults also meet fewer people, lowering the dominant
/// eigenvalue by about a third.
const HOLIDAY: [[f64; 4]; 4] = [[1.6, 0.6, 3.0, 0.4], [0.3, 2.0, 3.5, 0.4], [0.6, 1.2, 4.6, 0.7], [0.3, 0.5, 2.6, 1.8]];

/// The synthetic term/holiday contact pair.
pub fn contact_pair() -> ContactPair {
    ContactPair {
        term: ContactMatrix::new(TERM, MatrixLabel::Term).expect("valid constant"),
        holiday: ContactMatrix::new(HOLIDAY, MatrixLabel::Holiday).expect("valid constant"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub districts: usize,
    pub seed: u64,
    /// Spatial clusters of districts; 1 spreads districts uniformly.
    pub clusters: usize,
    pub median_population: f64,
    /// Log-scale standard deviation of district populations.
    pub population_spread: f64,
    /// Dirichlet concentration of the age pyramid.
    pub concentration: f64,
    /// Fraction of every district's residents commuting out.
    pub commuting_fraction: f64,
    /// Target share of origin–destination pairs with non-zero flux.
    pub density: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            districts: 20,
            seed: 1,
            clusters: 1,
            median_population: 2e5,
            population_spread: 0.5,
            concentration: 150.0,
            commuting_fraction: 0.1,
            density: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthData {
    pub nomis: Vec<NomisCensusRow>,
    pub censuses: Vec<Census>,
    pub mobility: MobilityMatrix,
    pub contacts: ContactPair,
    pub coordinates: Vec<(f64, f64)>,
    pub cluster: Vec<usize>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    if spec.districts == 0 {
        return Err(Error::param("at least one district is required"));
    }
    if !(spec.commuting_fraction >= 0.0 && spec.commuting_fraction < 1.0) {
        return Err(Error::param("commuting fraction must lie in [0, 1)"));
    }
    let mut rng = rng::stream(spec.seed, Stream::DataGen, 0);
    let n = spec.districts;
    let ids: Vec<String> = (0..n).map(|i| format!("D{i:03}")).collect();

    let pop_dist = LogNormal::new(spec.median_population.ln(), spec.population_spread)
        .map_err(|e| Error::param(format!("population distribution: {e}")))?;
    let gammas = PYRAMID
        .iter()
        .map(|p| Gamma::new(spec.concentration * p, 1.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::param(format!("age pyramid: {e}")))?;
    let mut nomis = Vec::with_capacity(n);
    for id in &ids {
        let total = pop_dist.sample(&mut rng).round().max(1000.0);
        let draws: Vec<f64> = gammas.iter().map(|g| g.sample(&mut rng).max(1e-9)).collect();
        let sum: f64 = draws.iter().sum();
        let mut bands = [0.0; 16];
        for (b, d) in bands.iter_mut().zip(&draws) {
            *b = (total * d / sum).round().max(1.0);
        }
        nomis.push(NomisCensusRow::new(id.clone(), bands)?);
    }
    let censuses = nomis.iter().map(|r| map_nomis_to_eames(r).map(|m| m.census)).collect::<Result<Vec<_>>>()?;

    let clusters = spec.clusters.clamp(1, n);
    let mut coordinates = Vec::with_capacity(n);
    let mut cluster = Vec::with_capacity(n);
    let jitter = Normal::new(0.0, 4.0).expect("valid constant");
    for k in 0..n {
        if clusters == 1 {
            coordinates.push((rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)));
            cluster.push(0);
        } else {
            let c = k * clusters / n;
            let angle = std::f64::consts::TAU * c as f64 / clusters as f64;
            let (cx, cy) = (50.0 + 40.0 * angle.cos(), 50.0 + 40.0 * angle.sin());
            coordinates.push((cx + jitter.sample(&mut rng), cy + jitter.sample(&mut rng)));
            cluster.push(c);
        }
    }

    let populations: Vec<f64> = censuses.iter().map(Census::total).collect();
    let mobility = gravity(&ids, &populations, &coordinates, spec);
    Ok(SynthData { nomis, censuses, mobility, contacts: contact_pair(), coordinates, cluster })
}

fn gravity(ids: &[String], pop: &[f64], xy: &[(f64, f64)], spec: &SynthSpec) -> MobilityMatrix {
    let n = ids.len();
    let mut m = MobilityMatrix::zeros(ids.to_vec());
    if n < 2 {
        return m;
    }
    let dist = |a: usize, b: usize| (xy[a].0 - xy[b].0).hypot(xy[a].1 - xy[b].1).max(1.0);
    let weight = |a: usize, b: usize| pop[b] / dist(a, b).powi(2);
    let per_origin = ((spec.density * (n - 1) as f64).ceil() as usize).clamp(2.min(n - 1), n - 1);
    let mut keep = vec![vec![false; n]; n];
    for a in 0..n {
        let mut dests: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        dests.sort_by(|&x, &y| weight(a, y).total_cmp(&weight(a, x)).then(x.cmp(&y)));
        for &b in &dests[..per_origin] {
            keep[a][b] = true;
            keep[b][a] = true;
        }
    }
    // join components through their closest pair of districts
    loop {
        let comp = components(&keep);
        if comp.iter().all(|&c| c == 0) {
            break;
        }
        let mut best = (0, 0, f64::INFINITY);
        for a in (0..n).filter(|&a| comp[a] == 0) {
            for b in (0..n).filter(|&b| comp[b] != 0) {
                if dist(a, b) < best.2 {
                    best = (a, b, dist(a, b));
                }
            }
        }
        keep[best.0][best.1] = true;
        keep[best.1][best.0] = true;
    }
    for a in 0..n {
        let total: f64 = (0..n).filter(|&b| keep[a][b]).map(|b| weight(a, b)).sum();
        for b in (0..n).filter(|&b| keep[a][b]) {
            m.set(a, b, (spec.commuting_fraction * pop[a] * weight(a, b) / total).round());
        }
    }
    m
}

/// Component label per vertex; the component of vertex 0 is labelled 0.
fn components(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if adj[v][u] && label[u] == usize::MAX {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    label
}

/// Paths of the files written by [`write_files`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFiles {
    pub census: PathBuf,
    pub mobility: PathBuf,
    pub contacts: PathBuf,
}

pub fn write_files(data: &SynthData, dir: &Path) -> Result<DataFiles> {
    std::fs::create_dir_all(dir)?;
    let files = DataFiles {
        census: dir.join("census.csv"),
        mobility: dir.join("mobility.csv"),
        contacts: dir.join("contacts.txt"),
    };
    io::write_census(&data.nomis, io::create(&files.census)?)?;
    io::write_mobility(&data.mobility, io::create(&files.mobility)?)?;
    std::fs::write(&files.contacts, io::format_contact_pair(&data.contacts))?;
    Ok(files)
}
