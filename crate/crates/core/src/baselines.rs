//! Reference precoders the optimizer is compared against.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{self, Precoder};

/// Channel-inverting precoder with an equal power split.
///
/// Columns point along the right pseudoinverse `H^H (H H^H)^{-1}`, so each
/// beam nulls every other user's direction; each is then scaled to carry
/// `P_T / K`. Requires at least as many feeds as users and a full-rank
/// channel, and errors with [`Error::QosUnreachable`] when even the
/// interference-free link cannot meet a user's SINR threshold.
pub fn zero_forcing_precoder(
    h: &DMatrix<Complex64>,
    total_power_w: f64,
    sinr_thresholds: &[f64],
    noise_power: f64,
) -> Result<Precoder> {
    let (k, m) = (h.nrows(), h.ncols());
    if k == 0 || m == 0 {
        return Err(Error::DimensionMismatch("empty channel".into()));
    }
    if sinr_thresholds.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected {k} thresholds, got {}",
            sinr_thresholds.len()
        )));
    }
    if !(total_power_w > 0.0 && total_power_w.is_finite())
        || !(noise_power > 0.0 && noise_power.is_finite())
    {
        return Err(Error::InvalidScenario(
            "power budget and noise power must be positive".into(),
        ));
    }
    if k > m {
        return Err(Error::RankDeficient);
    }

    let gram = h * h.adjoint();
    let chol = Cholesky::new(gram).ok_or(Error::RankDeficient)?;
    let pinv = h.adjoint() * chol.inverse();

    let per_beam = total_power_w / k as f64;
    let mut w = pinv;
    for mut col in w.column_iter_mut() {
        let norm = col.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::RankDeficient);
        }
        col.scale_mut(per_beam.sqrt() / norm);
    }

    let w = Precoder::new(w)?;
    let sinr = metrics::sinr(h, &w, noise_power)?;
    for (user, (&got, &needed)) in sinr.iter().zip(sinr_thresholds).enumerate() {
        if got < needed - metrics::SINR_ABS_TOL {
            return Err(Error::QosUnreachable(format!(
                "user {user} reaches SINR {got:.6} < threshold {needed:.6} \
                 under an equal split of {total_power_w} W"
            )));
        }
    }
    Ok(w)
}
