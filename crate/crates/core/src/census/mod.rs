//! Census ingestion and compositional analytics of district age structure.

mod hull;
mod select;
mod simplex;

use serde::{Deserialize, Serialize};

pub use hull::{hull_vertices, project};
pub use select::{select_representative_districts, SelectedDistrict, Selection, SELECTION_SIZE};
pub use simplex::{aitchison_distance, aitchison_mean, clr, perturb, to_simplex, SimplexPoint};

use crate::error::{Error, Result};
use crate::types::Census;

/// Column names of the 16 census age bands, in file order.
pub const NOMIS_BANDS: [&str; 16] = [
    "0-4", "5-7", "8-9", "10-14", "15", "16-17", "18-19", "20-24", "25-29", "30-44", "45-59", "60-64", "65-74",
    "75-84", "85-89", "90+",
];

const CHILDREN: std::ops::Range<usize> = 0..1;
const ADOLESCENTS: std::ops::Range<usize> = 1..6;
const SPLIT_18_19: usize = 6;
const ADULTS: std::ops::Range<usize> = 7..12;
const ELDERLY: std::ops::Range<usize> = 12..16;

/// One district's persons per census age band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomisCensusRow {
    pub district_id: String,
    pub bands: [f64; 16],
}

impl NomisCensusRow {
    pub fn new(district_id: impl Into<String>, bands: [f64; 16]) -> Result<Self> {
        let district_id = district_id.into();
        if bands.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::data(format!("census row {district_id}: band counts must be non-negative")));
        }
        Ok(Self { district_id, bands })
    }

    pub fn total(&self) -> f64 {
        self.bands.iter().sum()
    }
}

/// Result of remapping one census row to the model's four age groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedCensus {
    pub census: Census,
    /// The 18–19 band is odd, so rounding both halves up counted one person
    /// twice.
    pub double_counted: bool,
}

/// Maps the 16 census bands onto children, adolescents, adults and elderly.
/// The 18–19 band is split in half between adolescents and adults, each half
/// rounded up.
pub fn map_nomis_to_eames(row: &NomisCensusRow) -> Result<MappedCensus> {
    let sum = |r: std::ops::Range<usize>| row.bands[r].iter().sum::<f64>();
    let half = (row.bands[SPLIT_18_19] / 2.0).ceil();
    let counts = [sum(CHILDREN), sum(ADOLESCENTS) + half, half + sum(ADULTS), sum(ELDERLY)];
    let double_counted = row.bands[SPLIT_18_19].rem_euclid(2.0) == 1.0;
    if double_counted {
        log::debug!("district {}: odd 18-19 band counted one person twice", row.district_id);
    }
    Ok(MappedCensus { census: Census::new(row.district_id.clone(), counts)?, double_counted })
}
