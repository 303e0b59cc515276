//! Fractional-programming surrogates that make the energy-efficiency
//! objective tractable.
//!
//! Two transforms are composed:
//!
//! * The scalar ratio `N(W) / D(W)` (weighted sum rate over consumed
//!   power) becomes `v(W, mu) = 2 mu sqrt(N) - mu^2 D`, a concave
//!   parabola in `mu` that touches the true ratio at
//!   `mu* = sqrt(N) / D`.
//! * Each per-user SINR becomes the quadratic form
//!   `q_k(z_k) = 2 Re(conj(z_k) h_k w_k) - |z_k|^2 (I_k + sigma^2)`,
//!   where `I_k` is user k's interference power. It touches the true
//!   SINR at `z_k* = h_k w_k / (I_k + sigma^2)`.
//!
//! Both are exact majorizations from below: freezing the auxiliaries at
//! their closed-form optima makes the surrogate equal the true objective,
//! and any other auxiliary value under-estimates it. The alternating
//! optimizer exploits this by re-tightening the auxiliaries between
//! convex precoder updates.
//!
//! `z_k*` uses the complex coupling `h_k w_k` itself, not its magnitude:
//! the quadratic form is tight only when `conj(z_k) h_k w_k` is real
//! positive, which the complex quotient guarantees for any phase.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::metrics::{self, Precoder};

/// Frozen auxiliaries of both transforms for one outer iteration.
#[derive(Debug, Clone)]
pub struct AuxiliaryState {
    /// Scalar ratio auxiliary.
    pub mu: f64,
    /// Per-user SINR auxiliaries.
    pub z: Vec<Complex64>,
}

impl AuxiliaryState {
    /// Auxiliaries tightened at `w`: both transforms touch the true
    /// objective there.
    pub fn tightened(
        h: &DMatrix<Complex64>,
        w: &Precoder,
        noise_power: f64,
        weights: &[f64],
        static_power_w: f64,
    ) -> Result<Self> {
        Ok(AuxiliaryState {
            mu: optimal_mu(h, w, noise_power, weights, static_power_w)?,
            z: optimal_z(h, w, noise_power)?,
        })
    }
}

/// Weighted sum rate `N(W)` in nats.
fn weighted_sum_rate(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
    weights: &[f64],
) -> Result<f64> {
    let report = metrics::energy_efficiency(h, w, noise_power, weights, 1.0)?;
    Ok(report
        .per_user_rate_nats
        .iter()
        .zip(weights)
        .map(|(r, a)| a * r)
        .sum())
}

/// Closed-form optimal ratio auxiliary `mu* = sqrt(N(W)) / D(W)`.
pub fn optimal_mu(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
    weights: &[f64],
    static_power_w: f64,
) -> Result<f64> {
    let n = weighted_sum_rate(h, w, noise_power, weights)?;
    let d = metrics::total_power(w) + static_power_w;
    Ok(n.sqrt() / d)
}

/// Ratio surrogate `v(W, mu) = 2 mu sqrt(N(W)) - mu^2 D(W)`.
pub fn surrogate_v(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    mu: f64,
    noise_power: f64,
    weights: &[f64],
    static_power_w: f64,
) -> Result<f64> {
    let n = weighted_sum_rate(h, w, noise_power, weights)?;
    let d = metrics::total_power(w) + static_power_w;
    Ok(2.0 * mu * n.sqrt() - mu * mu * d)
}

/// Closed-form optimal SINR auxiliaries
/// `z_k* = h_k w_k / (I_k + sigma^2)`.
pub fn optimal_z(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
) -> Result<Vec<Complex64>> {
    let direct = metrics::direct_gains(h, w)?;
    let denom = metrics::interference_plus_noise(h, w, noise_power)?;
    Ok(direct
        .into_iter()
        .zip(denom)
        .map(|(num, den)| num / den)
        .collect())
}

/// Quadratic SINR surrogate for user `k` at auxiliary `z_k`:
/// `2 Re(conj(z_k) h_k w_k) - |z_k|^2 (I_k + sigma^2)`.
pub fn quadratic_sinr(
    z_k: Complex64,
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
    k: usize,
) -> Result<f64> {
    let direct = metrics::direct_gains(h, w)?;
    let denom = metrics::interference_plus_noise(h, w, noise_power)?;
    Ok(2.0 * (z_k.conj() * direct[k]).re - z_k.norm_sqr() * denom[k])
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
