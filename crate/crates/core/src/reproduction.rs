//! Next-generation-matrix algebra: spectral radius, `beta` from `R0`, and the
//! reciprocity correction of contact matrices.
//!
//! For the SEIR model the next-generation matrix is `K = beta * M / gamma`, so
//! `R0 = beta / gamma * rho(M)` where `rho` is the Perron root of the contact
//! matrix.

use crate::error::{Error, Result};
use crate::types::{Census, ContactMatrix, GROUPS};

const MAX_ITERATIONS: usize = 10_000;
const TOLERANCE: f64 = 1e-10;

/// Dominant eigenvalue of a non-negative 4×4 matrix by power iteration.
///
/// Iterates on `M + cI`: the shift keeps the Perron root strictly dominant in
/// modulus even for periodic matrices (e.g. permutations), and
/// `rho(M + cI) = rho(M) + c` for non-negative `M`.
pub fn spectral_radius(m: &[[f64; GROUPS]; GROUPS]) -> Result<f64> {
    let max_entry = m.iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    if !(max_entry > 0.0) || m.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::DegenerateContactMatrix);
    }
    let shift = 0.5 * max_entry;
    let mut x = [1.0 / GROUPS as f64; GROUPS];
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mx = mat_vec(m, &x);
        let sum_x: f64 = x.iter().sum();
        lambda = mx.iter().sum::<f64>() / sum_x;
        let residual = mx.iter().zip(&x).map(|(a, b)| (a - lambda * b).abs()).fold(0.0_f64, f64::max);
        let scale = x.iter().fold(0.0_f64, |a, &b| a.max(b));
        if residual <= TOLERANCE * lambda.abs().max(f64::MIN_POSITIVE) * scale {
            break;
        }
        let mut next = [0.0; GROUPS];
        for i in 0..GROUPS {
            next[i] = mx[i] + shift * x[i];
        }
        let norm: f64 = next.iter().sum();
        if !(norm > 0.0) {
            return Err(Error::DegenerateContactMatrix);
        }
        next.iter_mut().for_each(|v| *v /= norm);
        x = next;
    }
    if lambda <= 0.0 {
        // nilpotent matrices, e.g. strictly upper triangular
        return Err(Error::DegenerateContactMatrix);
    }
    Ok(lambda)
}

fn mat_vec(m: &[[f64; GROUPS]; GROUPS], x: &[f64; GROUPS]) -> [f64; GROUPS] {
    let mut out = [0.0; GROUPS];
    for i in 0..GROUPS {
        out[i] = (0..GROUPS).map(|j| m[i][j] * x[j]).sum();
    }
    out
}

/// Transmission probability per contact giving basic reproduction number
/// `r0` on contact matrix `m`.
pub fn beta_for_r0(m: &ContactMatrix, gamma: f64, r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::param(format!("R0 must be positive, got {r0}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    Ok(r0 * gamma / m.spectral_radius()?)
}

/// Basic reproduction number implied by `beta` on `m`.
pub fn r0_for_beta(m: &ContactMatrix, gamma: f64, beta: f64) -> Result<f64> {
    Ok(beta / gamma * m.spectral_radius()?)
}

/// Total-contact balancing: `m'_ij = (m_ij N_i + m_ji N_j) / (2 N_i)`, so that
/// `m'_ij N_i = m'_ji N_j`.
pub fn make_reciprocal(m: &ContactMatrix, census: &Census) -> Result<ContactMatrix> {
    let n = census.counts;
    if let Some(g) = n.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::EmptyAgeGroup(g));
    }
    let e = m.entries();
    let mut out = [[0.0; GROUPS]; GROUPS];
    for i in 0..GROUPS {
        for j in 0..GROUPS {
            out[i][j] = (e[i][j] * n[i] + e[j][i] * n[j]) / (2.0 * n[i]);
        }
    }
    ContactMatrix::new(out, m.label())
}
