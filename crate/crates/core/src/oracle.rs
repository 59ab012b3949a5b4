//! Independent reference results: converged high-order quadrature, 2-D
//! Monte-Carlo over the encounter plane, and a 3-D linear-encounter
//! Monte-Carlo validating the short-term reduction.
//!
//! The reference quadrature derives its Gauss-Legendre nodes by Newton
//! iteration on the Legendre polynomial, independently of the fixed tables
//! in [`crate::quadrature`], so the two routes never share node data.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{GeometryError, OracleError};
use crate::geometry::{EncounterGeometry, ObjectState};
use crate::quadrature::{integrand_p, KahanSum};

const MAX_REFINEMENTS: usize = 20;
const CONVERGENCE_REL: f64 = 1e-15;
const MC_BATCH: u64 = 1 << 16;

/// Monte-Carlo configuration. `window_halfwidth` and `time_step` apply to
/// the 3-D linear validator only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: u64,
    pub rng_seed: u64,
    /// Seconds; trajectories are propagated over [-W, +W].
    pub window_halfwidth: f64,
    /// Seconds; must stay below the half-width. The minimum-distance check
    /// is closed-form, so this only parameterizes window-edge handling.
    pub time_step: f64,
}

impl McConfig {
    pub fn new(
        samples: u64,
        rng_seed: u64,
        window_halfwidth: f64,
        time_step: f64,
    ) -> Result<Self, OracleError> {
        if samples < 10_000 {
            return Err(OracleError::InvalidConfig(format!(
                "samples must be >= 1e4, got {samples}"
            )));
        }
        if !(time_step > 0.0 && window_halfwidth > 0.0 && time_step < window_halfwidth) {
            return Err(OracleError::InvalidConfig(format!(
                "need 0 < time_step < window_halfwidth, got {time_step} vs {window_halfwidth}"
            )));
        }
        Ok(Self {
            samples,
            rng_seed,
            window_halfwidth,
            time_step,
        })
    }
}

/// Legendre polynomial value and derivative at `x` via the three-term
/// recurrence.
fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=order {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = order as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration from the
/// Chebyshev initial guess.
fn newton_gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        let mut x =
            (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_derivative(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn gl8_pcol(r: f64, sigma_x: f64, sigma_z: f64, table: &[(f64, f64)], n: usize, m: usize) -> f64 {
    let dy = r / n as f64;
    let dphi = TAU / m as f64;
    let mut acc = KahanSum::default();
    for i in 0..n {
        let y0 = i as f64 * dy;
        for &(xa, wa) in table {
            let y = y0 + 0.5 * dy * (xa + 1.0);
            let wy = 0.5 * dy * wa;
            for j in 0..m {
                let phi0 = j as f64 * dphi;
                for &(xb, wb) in table {
                    let phi = phi0 + 0.5 * dphi * (xb + 1.0);
                    acc.add(wy * 0.5 * dphi * wb * integrand_p(y, phi, sigma_x, sigma_z));
                }
            }
        }
    }
    acc.value()
}

/// Converged reference value of the collision-probability integral:
/// order-8 Gauss-Legendre with step halving until successive refinements
/// agree to 1e-15 relative.
pub fn reference_pcol(geometry: &EncounterGeometry) -> Result<f64, OracleError> {
    let table = newton_gauss_legendre(8);
    let r = geometry.combined_radius;
    let (sx, sz) = (geometry.sigma_x, geometry.sigma_z);
    let mut n = 2usize;
    let mut m = 4usize;
    let mut prev = gl8_pcol(r, sx, sz, &table, n, m);
    let mut last_delta = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        n *= 2;
        m *= 2;
        let next = gl8_pcol(r, sx, sz, &table, n, m);
        last_delta = (next - prev).abs();
        if last_delta <= CONVERGENCE_REL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(OracleError::NonConvergence {
        refinements: MAX_REFINEMENTS,
        last_delta,
    })
}

/// 2-D hit-or-miss estimate of the collision probability: samples the
/// zero-mean anisotropic Gaussian on the encounter plane and counts points
/// inside the disc of radius r. Returns `(estimate, binomial stderr)`.
///
/// Deterministic given the seed; samples are drawn in fixed-size batches
/// with per-batch sub-streams so batches can be farmed out without changing
/// the result.
pub fn mc_pcol_2d(geometry: &EncounterGeometry, cfg: &McConfig) -> (f64, f64) {
    let r2 = geometry.combined_radius * geometry.combined_radius;
    let (sx, sz) = (geometry.sigma_x, geometry.sigma_z);
    let mut hits = 0u64;
    let mut batch = 0u64;
    let mut remaining = cfg.samples;
    while remaining > 0 {
        let count = remaining.min(MC_BATCH);
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(batch);
        for _ in 0..count {
            let zx: f64 = rng.sample(StandardNormal);
            let zz: f64 = rng.sample(StandardNormal);
            let x = sx * zx;
            let z = sz * zz;
            if x * x + z * z <= r2 {
                hits += 1;
            }
        }
        remaining -= count;
        batch += 1;
    }
    let n = cfg.samples as f64;
    let p = hits as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// Square root of a PSD matrix via its symmetric eigendecomposition, with
/// tiny negative eigenvalues clamped to zero.
fn psd_sqrt(c: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = nalgebra::SymmetricEigen::new(*c);
    let sqrt = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    eig.eigenvectors * sqrt * eig.eigenvectors.transpose()
}

/// 3-D linear-encounter Monte-Carlo: samples the initial relative position
/// from N(mu_rel, C1 + C2), propagates linearly over [-W, +W], and counts
/// trajectories whose minimum distance to the origin is at most r = r1 + r2.
/// The per-trajectory minimum is closed-form (point-to-segment), no time
/// stepping.
pub fn mc_pcol_3d_linear(
    s1: &ObjectState,
    s2: &ObjectState,
    cfg: &McConfig,
) -> Result<(f64, f64), OracleError> {
    let rel_v = s1.velocity() - s2.velocity();
    let speed = rel_v.norm();
    if speed < 1e-9 {
        return Err(GeometryError::ZeroRelativeVelocity { speed }.into());
    }
    let mu = s1.position() - s2.position();
    let root = psd_sqrt(&(s1.covariance() + s2.covariance()));
    let r2 = {
        let r = s1.radius() + s2.radius();
        r * r
    };
    let v2 = speed * speed;
    let w = cfg.window_halfwidth;

    let mut hits = 0u64;
    let mut batch = 0u64;
    let mut remaining = cfg.samples;
    while remaining > 0 {
        let count = remaining.min(MC_BATCH);
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(batch);
        for _ in 0..count {
            let z = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let x0 = mu + root * z;
            let t_star = (-x0.dot(&rel_v) / v2).clamp(-w, w);
            let closest = x0 + rel_v * t_star;
            if closest.norm_squared() <= r2 {
                hits += 1;
            }
        }
        remaining -= count;
        batch += 1;
    }
    let n = cfg.samples as f64;
    let p = hits as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}
