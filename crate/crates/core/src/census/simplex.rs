use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Census, GROUPS};

/// A strictly positive composition of the four age groups summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint([f64; GROUPS]);

impl SimplexPoint {
    /// Closes `parts` to unit sum.
    pub fn close(parts: [f64; GROUPS]) -> Result<Self> {
        if parts.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::data(format!("composition needs strictly positive parts, got {parts:?}")));
        }
        let total: f64 = parts.iter().sum();
        Ok(Self(parts.map(|v| v / total)))
    }

    pub fn parts(&self) -> &[f64; GROUPS] {
        &self.0
    }
}

pub fn to_simplex(census: &Census) -> Result<SimplexPoint> {
    SimplexPoint::close(census.counts)
        .map_err(|_| Error::data(format!("district {} has an empty age group", census.district_id)))
}

/// Centred log-ratio transform.
pub fn clr(p: &SimplexPoint) -> [f64; GROUPS] {
    let logs = p.0.map(f64::ln);
    let mean = logs.iter().sum::<f64>() / GROUPS as f64;
    logs.map(|l| l - mean)
}

/// Componentwise geometric mean, closed to unit sum.
pub fn aitchison_mean(points: &[SimplexPoint]) -> Result<SimplexPoint> {
    if points.is_empty() {
        return Err(Error::data("mean of an empty set of compositions"));
    }
    let n = points.len() as f64;
    let mut log_mean = [0.0; GROUPS];
    for p in points {
        for (acc, v) in log_mean.iter_mut().zip(p.0) {
            *acc += v.ln() / n;
        }
    }
    SimplexPoint::close(log_mean.map(f64::exp))
}

/// Euclidean distance between centred log-ratio coordinates.
pub fn aitchison_distance(p: &SimplexPoint, q: &SimplexPoint) -> f64 {
    clr(p).iter().zip(clr(q)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Perturbation `p ⊕ r`: componentwise product, closed.
pub fn perturb(p: &SimplexPoint, r: &SimplexPoint) -> SimplexPoint {
    let mut out = [0.0; GROUPS];
    for g in 0..GROUPS {
        out[g] = p.0[g] * r.0[g];
    }
    let total: f64 = out.iter().sum();
    SimplexPoint(out.map(|v| v / total))
}
