use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Commuters per day between districts; row = origin, column = destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityMatrix {
    ids: Vec<String>,
    flux: Vec<f64>,
}

impl MobilityMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n {
            return Err(Error::data(format!("mobility matrix has {} rows for {n} districts", rows.len())));
        }
        let mut flux = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::data(format!("mobility row {i} has {} entries, expected {n}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::data(format!("mobility row {i}: invalid flux {v}")));
            }
            flux.extend(row);
        }
        Ok(Self { ids, flux })
    }

    pub fn zeros(ids: Vec<String>) -> Self {
        let n = ids.len();
        Self { ids, flux: vec![0.0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, origin: usize, dest: usize) -> f64 {
        self.flux[origin * self.ids.len() + dest]
    }

    pub fn set(&mut self, origin: usize, dest: usize, value: f64) {
        let n = self.ids.len();
        self.flux[origin * n + dest] = value;
    }

    pub fn row(&self, origin: usize) -> &[f64] {
        let n = self.ids.len();
        &self.flux[origin * n..(origin + 1) * n]
    }

    /// Uniformly rescaled copy.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { ids: self.ids.clone(), flux: self.flux.iter().map(|v| v * factor).collect() }
    }

    /// Restriction to a subset of districts, in the given order.
    pub fn subset(&self, keep: &[usize]) -> Self {
        let ids = keep.iter().map(|&i| self.ids[i].clone()).collect();
        let mut flux = Vec::with_capacity(keep.len() * keep.len());
        for &o in keep {
            for &d in keep {
                flux.push(self.get(o, d));
            }
        }
        Self { ids, flux }
    }
}

/// How raw commuter counts enter the between-patch force of infection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityNormalization {
    /// Use commuter counts as given.
    Raw,
    /// Divide by the origin district's population (fraction commuting).
    #[default]
    PerCapitaOrigin,
}

/// Inbound coupling lists: for each destination, `(origin, weight)` pairs with
/// positive off-diagonal flux.
pub(crate) fn inbound_lists(
    mobility: &MobilityMatrix,
    populations: &[f64],
    normalization: MobilityNormalization,
) -> Vec<Vec<(usize, f64)>> {
    let n = mobility.len();
    let mut inbound = vec![Vec::new(); n];
    for origin in 0..n {
        let scale = match normalization {
            MobilityNormalization::Raw => 1.0,
            MobilityNormalization::PerCapitaOrigin => 1.0 / populations[origin],
        };
        for (dest, list) in inbound.iter_mut().enumerate() {
            let f = mobility.get(origin, dest);
            if origin != dest && f > 0.0 {
                list.push((origin, f * scale));
            }
        }
    }
    inbound
}
