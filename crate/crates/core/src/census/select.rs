use serde::{Deserialize, Serialize};

use super::{aitchison_distance, aitchison_mean, hull_vertices, project, to_simplex, SimplexPoint};
use crate::error::{Error, Result};
use crate::types::Census;

/// Number of districts returned by [`select_representative_districts`].
pub const SELECTION_SIZE: usize = 10;
const HULL_PICKS: usize = SELECTION_SIZE - 1;
/// Largest hull for which every subset is scored.
const EXHAUSTIVE_MAX_HULL: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedDistrict {
    pub district_id: String,
    /// `central` for the district closest to the mean, `hull` otherwise.
    pub role: String,
    pub composition: [f64; 4],
    pub distance_to_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub districts: Vec<SelectedDistrict>,
    pub mean: [f64; 4],
    pub hull_size: usize,
    /// Minimum pairwise distance among the hull picks.
    pub min_pairwise_distance: f64,
    pub exhaustive: bool,
    /// Districts left out because an age group was empty.
    pub excluded: Vec<String>,
}

/// Picks the district closest to the compositional mean plus nine convex-hull
/// districts that are spread as far apart as possible (maximum minimum
/// pairwise distance).
pub fn select_representative_districts(censuses: &[Census]) -> Result<Selection> {
    let mut ids = Vec::new();
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for c in censuses {
        match to_simplex(c) {
            Ok(p) => {
                ids.push(c.district_id.clone());
                points.push(p);
            }
            Err(_) => {
                log::warn!("district {} has an empty age group and is left out", c.district_id);
                excluded.push(c.district_id.clone());
            }
        }
    }
    if points.len() < SELECTION_SIZE {
        return Err(Error::data(format!(
            "selection needs at least {SELECTION_SIZE} districts with positive age groups, got {}",
            points.len()
        )));
    }
    let mean = aitchison_mean(&points)?;
    let to_mean: Vec<f64> = points.iter().map(|p| aitchison_distance(p, &mean)).collect();
    let central = (0..points.len()).min_by(|&a, &b| to_mean[a].total_cmp(&to_mean[b])).unwrap();

    let projected: Vec<[f64; 3]> = points.iter().map(|p| project(p, 3)).collect();
    let full_hull = hull_vertices(&projected)?;
    let hull: Vec<usize> = full_hull.iter().copied().filter(|&v| v != central).collect();
    let (picks, exhaustive) = if hull.len() < HULL_PICKS {
        log::warn!("convex hull has only {} vertices besides the central district", hull.len());
        (hull.clone(), true)
    } else if hull.len() <= EXHAUSTIVE_MAX_HULL {
        (best_subset(&points, &hull).0, true)
    } else {
        log::warn!("convex hull has {} vertices, selecting greedily", hull.len());
        (greedy_subset(&points, &hull), false)
    };

    let entry = |i: usize, role: &str| SelectedDistrict {
        district_id: ids[i].clone(),
        role: role.to_string(),
        composition: *points[i].parts(),
        distance_to_mean: to_mean[i],
    };
    let mut districts = vec![entry(central, "central")];
    districts.extend(picks.iter().map(|&i| entry(i, "hull")));
    Ok(Selection {
        districts,
        mean: *mean.parts(),
        hull_size: full_hull.len(),
        min_pairwise_distance: min_pairwise(&points, &picks),
        exhaustive,
        excluded,
    })
}

pub(crate) fn min_pairwise(points: &[SimplexPoint], subset: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (k, &a) in subset.iter().enumerate() {
        for &b in &subset[k + 1..] {
            best = best.min(aitchison_distance(&points[a], &points[b]));
        }
    }
    best
}

/// Exhaustive max-min subset of size nine; earliest subset in
/// lexicographic index order wins ties. Also returns the number of subsets
/// visited.
fn best_subset(points: &[SimplexPoint], candidates: &[usize]) -> (Vec<usize>, u64) {
    let h = candidates.len();
    let dist: Vec<Vec<f64>> = candidates
        .iter()
        .map(|&a| candidates.iter().map(|&b| aitchison_distance(&points[a], &points[b])).collect())
        .collect();
    let mut idx: Vec<usize> = (0..HULL_PICKS).collect();
    let mut best = (f64::NEG_INFINITY, idx.clone());
    let mut visited = 0u64;
    loop {
        visited += 1;
        let mut score = f64::INFINITY;
        'outer: for a in 0..HULL_PICKS {
            for b in a + 1..HULL_PICKS {
                score = score.min(dist[idx[a]][idx[b]]);
                if score <= best.0 {
                    break 'outer;
                }
            }
        }
        if score > best.0 {
            best = (score, idx.clone());
        }
        // next combination
        let mut i = HULL_PICKS;
        loop {
            if i == 0 {
                return (best.1.into_iter().map(|k| candidates[k]).collect(), visited);
            }
            i -= 1;
            if idx[i] < h - HULL_PICKS + i {
                idx[i] += 1;
                for j in i + 1..HULL_PICKS {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Farthest-point heuristic seeded with the most distant pair.
fn greedy_subset(points: &[SimplexPoint], candidates: &[usize]) -> Vec<usize> {
    let d = |a: usize, b: usize| aitchison_distance(&points[a], &points[b]);
    let mut pair = (candidates[0], candidates[1], f64::NEG_INFINITY);
    for (k, &a) in candidates.iter().enumerate() {
        for &b in &candidates[k + 1..] {
            if d(a, b) > pair.2 {
                pair = (a, b, d(a, b));
            }
        }
    }
    let mut chosen = vec![pair.0, pair.1];
    while chosen.len() < HULL_PICKS {
        let next = candidates
            .iter()
            .copied()
            .filter(|c| !chosen.contains(c))
            .max_by(|&a, &b| {
                let da = chosen.iter().map(|&c| d(a, c)).fold(f64::INFINITY, f64::min);
                let db = chosen.iter().map(|&c| d(b, c)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .unwrap();
        chosen.push(next);
    }
    chosen.sort_unstable();
    chosen
}
