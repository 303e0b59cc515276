//! Per-user link metrics for a candidate precoder: SINR, achievable rate,
//! transmit power, energy efficiency, and feasibility against the power
//! budget and QoS thresholds.
//!
//! Rates are natural-log (nats); conversions to bits use the carrier
//! bandwidth at the reporting boundary.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default relative tolerance on the power budget check.
pub const POWER_REL_TOL: f64 = 1e-9;
/// Default absolute tolerance on per-user SINR slack.
pub const SINR_ABS_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// precoder
// ---------------------------------------------------------------------------

/// Complex M x K precoding matrix; column k carries user k's stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder(DMatrix<Complex64>);

impl Precoder {
    pub fn new(w: DMatrix<Complex64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::DimensionMismatch("empty precoder".into()));
        }
        if w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::DimensionMismatch(
                "precoder entries must be finite".into(),
            ));
        }
        Ok(Precoder(w))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn num_feeds(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.0.ncols()
    }
}

/// Total transmit power: the squared Frobenius norm of W.
pub fn total_power(w: &Precoder) -> f64 {
    w.matrix().norm_squared()
}

/// Converts a natural-log rate (nats/s/Hz aggregated over the carrier) to
/// bits per second.
pub fn nats_to_bps(rate_nats: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * rate_nats / std::f64::consts::LN_2
}

/// Converts energy efficiency from nats/W to Gbps/W.
pub fn nats_per_w_to_gbps_per_w(ee_nats_per_w: f64, bandwidth_hz: f64) -> f64 {
    nats_to_bps(ee_nats_per_w, bandwidth_hz) * 1e-9
}

/// All pairwise stream couplings: entry (k, l) is `h_k * w_l`.
fn cross_gains(h: &DMatrix<Complex64>, w: &Precoder) -> Result<DMatrix<Complex64>> {
    if h.ncols() != w.num_feeds() || h.nrows() != w.num_users() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{}, precoder is {}x{}",
            h.nrows(),
            h.ncols(),
            w.num_feeds(),
            w.num_users()
        )));
    }
    Ok(h * w.matrix())
}

fn check_noise(noise_power: f64) -> Result<()> {
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "noise power must be positive and finite, got {noise_power}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SINR and rate
// ---------------------------------------------------------------------------

/// Per-user SINR: `|h_k w_k|^2 / (sum_{l != k} |h_k w_l|^2 + noise)`.
pub fn sinr(h: &DMatrix<Complex64>, w: &Precoder, noise_power: f64) -> Result<Vec<f64>> {
    check_noise(noise_power)?;
    let cross = cross_gains(h, w)?;
    let k = h.nrows();
    Ok((0..k)
        .map(|i| {
            let signal = cross[(i, i)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&l| l != i)
                .map(|l| cross[(i, l)].norm_sqr())
                .sum();
            signal / (interference + noise_power)
        })
        .collect())
}

/// Per-user achievable rate `log(1 + SINR)` in nats.
pub fn rate(h: &DMatrix<Complex64>, w: &Precoder, noise_power: f64) -> Result<Vec<f64>> {
    Ok(sinr(h, w, noise_power)?
        .into_iter()
        .map(|g| (1.0 + g).ln())
        .collect())
}

/// Per-user disturbance power `sum_{l != k} |h_k w_l|^2 + noise`, the SINR
/// denominator.
pub fn interference_plus_noise(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
) -> Result<Vec<f64>> {
    check_noise(noise_power)?;
    let cross = cross_gains(h, w)?;
    let k = h.nrows();
    Ok((0..k)
        .map(|i| {
            (0..k)
                .filter(|&l| l != i)
                .map(|l| cross[(i, l)].norm_sqr())
                .sum::<f64>()
                + noise_power
        })
        .collect())
}

/// Direct stream couplings `h_k w_k` for every user.
pub fn direct_gains(h: &DMatrix<Complex64>, w: &Precoder) -> Result<Vec<Complex64>> {
    let cross = cross_gains(h, w)?;
    Ok((0..h.nrows()).map(|i| cross[(i, i)]).collect())
}

// ---------------------------------------------------------------------------
// energy efficiency
// ---------------------------------------------------------------------------

/// Energy-efficiency evaluation of one precoder, self-contained for
/// reporting.
#[derive(Debug, Clone)]
pub struct EEReport {
    pub per_user_sinr: Vec<f64>,
    pub per_user_rate_nats: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_power_w: f64,
    pub static_power_w: f64,
    /// Weighted sum rate over total consumed power, nats/W.
    pub ee_nats_per_w: f64,
}

impl EEReport {
    pub fn ee_gbps_per_w(&self, bandwidth_hz: f64) -> f64 {
        nats_per_w_to_gbps_per_w(self.ee_nats_per_w, bandwidth_hz)
    }

    /// CSV header matching [`EEReport::csv_row`] for K users.
    pub fn csv_header(num_users: usize) -> String {
        let mut cols = vec![
            "ee_nats_per_w".to_string(),
            "total_power_w".to_string(),
            "static_power_w".to_string(),
        ];
        for k in 0..num_users {
            cols.push(format!("sinr_{k}"));
        }
        for k in 0..num_users {
            cols.push(format!("rate_nats_{k}"));
        }
        cols.join(",")
    }

    /// One CSV row of the report values, column order per [`EEReport::csv_header`].
    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.ee_nats_per_w.to_string(),
            self.total_power_w.to_string(),
            self.static_power_w.to_string(),
        ];
        cols.extend(self.per_user_sinr.iter().map(|v| v.to_string()));
        cols.extend(self.per_user_rate_nats.iter().map(|v| v.to_string()));
        cols.join(",")
    }
}

/// Weighted-sum-rate energy efficiency
/// `sum_k alpha_k log(1 + SINR_k) / (|W|^2 + static_power)` with the full
/// per-user breakdown.
pub fn energy_efficiency(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
    weights: &[f64],
    static_power_w: f64,
) -> Result<EEReport> {
    if weights.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} users",
            weights.len(),
            h.nrows()
        )));
    }
    if !(static_power_w > 0.0 && static_power_w.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "static power must be positive and finite, got {static_power_w}"
        )));
    }
    let per_user_sinr = sinr(h, w, noise_power)?;
    let per_user_rate_nats: Vec<f64> = per_user_sinr.iter().map(|g| (1.0 + g).ln()).collect();
    let weighted_rate: f64 = per_user_rate_nats
        .iter()
        .zip(weights)
        .map(|(r, a)| a * r)
        .sum();
    let total_power_w = total_power(w);
    Ok(EEReport {
        per_user_sinr,
        per_user_rate_nats,
        weights: weights.to_vec(),
        total_power_w,
        static_power_w,
        ee_nats_per_w: weighted_rate / (total_power_w + static_power_w),
    })
}

// ---------------------------------------------------------------------------
// feasibility
// ---------------------------------------------------------------------------

/// Slack breakdown of the power and QoS constraints for one precoder.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub total_power_w: f64,
    pub power_budget_w: f64,
    /// `power_budget - total_power`; negative means over budget.
    pub power_slack_w: f64,
    /// Per-user `SINR_k - threshold_k`; negative means a QoS violation.
    pub sinr_slacks: Vec<f64>,
}

impl FeasibilityReport {
    /// Feasibility under explicit tolerances: the power budget may be
    /// exceeded by `power_rel_tol` relative to the budget and each SINR may
    /// undershoot its threshold by `sinr_abs_tol`.
    pub fn is_feasible_within(&self, power_rel_tol: f64, sinr_abs_tol: f64) -> bool {
        self.power_slack_w >= -power_rel_tol * self.power_budget_w.abs()
            && self.sinr_slacks.iter().all(|&s| s >= -sinr_abs_tol)
    }

    /// Feasibility under the default tolerances
    /// ([`POWER_REL_TOL`], [`SINR_ABS_TOL`]).
    pub fn is_feasible(&self) -> bool {
        self.is_feasible_within(POWER_REL_TOL, SINR_ABS_TOL)
    }

    /// Users whose SINR slack is below `-sinr_abs_tol`.
    pub fn violated_users(&self, sinr_abs_tol: f64) -> Vec<usize> {
        self.sinr_slacks
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < -sinr_abs_tol)
            .map(|(k, _)| k)
            .collect()
    }

    /// Smallest SINR slack across users (infinite when there are no users).
    pub fn min_sinr_slack(&self) -> f64 {
        self.sinr_slacks.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks the power budget and per-user QoS thresholds, returning the full
/// slack breakdown.
pub fn check_feasible(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
    power_budget_w: f64,
    sinr_thresholds: &[f64],
) -> Result<FeasibilityReport> {
    if sinr_thresholds.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds for {} users",
            sinr_thresholds.len(),
            h.nrows()
        )));
    }
    let gammas = sinr(h, w, noise_power)?;
    let total_power_w = total_power(w);
    Ok(FeasibilityReport {
        total_power_w,
        power_budget_w,
        power_slack_w: power_budget_w - total_power_w,
        sinr_slacks: gammas
            .iter()
            .zip(sinr_thresholds)
            .map(|(g, t)| g - t)
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo validation
// ---------------------------------------------------------------------------

/// Monte Carlo SINR estimate for one user from simulated symbol-level
/// reception: unit-power circular Gaussian symbols per stream plus
/// circular Gaussian receiver noise. Deterministic in `seed`.
pub fn empirical_sinr(
    h: &DMatrix<Complex64>,
    w: &Precoder,
    noise_power: f64,
    user: usize,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_noise(noise_power)?;
    if user >= h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "user {user} out of range for {} users",
            h.nrows()
        )));
    }
    if num_samples == 0 {
        return Err(Error::InvalidScenario("need at least one sample".into()));
    }
    let cross = cross_gains(h, w)?;
    let couplings: Vec<Complex64> = (0..h.nrows()).map(|l| cross[(user, l)]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_scale = (noise_power / 2.0).sqrt();
    let mut sample_circular = |scale: f64| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    };

    let symbol_scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut signal_energy = 0.0;
    let mut disturbance_energy = 0.0;
    for _ in 0..num_samples {
        let mut disturbance = sample_circular(noise_scale);
        for (l, c) in couplings.iter().enumerate() {
            let symbol = sample_circular(symbol_scale);
            if l == user {
                signal_energy += (c * symbol).norm_sqr();
            } else {
                disturbance += c * symbol;
            }
        }
        disturbance_energy += disturbance.norm_sqr();
    }
    Ok(signal_energy / disturbance_energy)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn precoder(entries: &[Complex64], m: usize, k: usize) -> Precoder {
        Precoder::new(DMatrix::from_row_slice(m, k, entries)).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_instance(seed: u64, k: usize, m: usize) -> (DMatrix<Complex64>, Precoder) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |_: usize, _: usize| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let h = DMatrix::from_fn(k, m, &mut draw);
        let w = Precoder::new(DMatrix::from_fn(m, k, &mut draw)).unwrap();
        (h, w)
    }

    #[test]
    fn single_user_sinr_is_signal_over_noise() {
        let h = DMatrix::from_element(1, 1, c(2.0, 0.0));
        let w = precoder(&[c(3.0, 0.0)], 1, 1);
        assert_eq!(sinr(&h, &w, 1.0).unwrap(), vec![36.0]);
    }

    #[test]
    fn orthogonal_streams_see_no_interference() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let w = precoder(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)], 2, 2);
        let g = sinr(&h, &w, 0.5).unwrap();
        assert_relative_eq!(g[0], 8.0, max_relative = 1e-12);
        assert_relative_eq!(g[1], 18.0, max_relative = 1e-12);
    }

    #[test]
    fn interference_enters_the_denominator() {
        // both streams land on both users with equal strength
        let w = precoder(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 2, 2);
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let g = sinr(&h, &w, 1.0).unwrap();
        assert_relative_eq!(g[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(g[1], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn unit_sinr_gives_bandwidth_rate_in_bits() {
        let h = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let w = precoder(&[c(1.0, 0.0)], 1, 1);
        let r = rate(&h, &w, 1.0).unwrap();
        assert_relative_eq!(r[0], std::f64::consts::LN_2, max_relative = 1e-12);
        assert_relative_eq!(nats_to_bps(r[0], 500.0e6), 500.0e6, max_relative = 1e-12);
    }

    #[test]
    fn scalar_energy_efficiency_matches_closed_form() {
        let h = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let w = precoder(&[c(1.0, 0.0)], 1, 1);
        let report = energy_efficiency(&h, &w, 1.0, &[1.0], 1.0).unwrap();
        assert_relative_eq!(
            report.ee_nats_per_w,
            std::f64::consts::LN_2 / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(report.total_power_w, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn report_ee_recomputes_from_its_own_fields() {
        let (h, w) = random_instance(11, 4, 4);
        let weights = [1.0, 0.5, 2.0, 1.0];
        let report = energy_efficiency(&h, &w, 0.3, &weights, 2.0).unwrap();
        let num: f64 = report
            .per_user_rate_nats
            .iter()
            .zip(&report.weights)
            .map(|(r, a)| a * r)
            .sum();
        assert_eq!(
            report.ee_nats_per_w,
            num / (report.total_power_w + report.static_power_w),
            "EE must equal the ratio of its own reported fields"
        );
    }

    #[test]
    fn unit_conversion_between_nats_and_gbps() {
        let bw = 500.0e6;
        let ee_nats = 0.25;
        let gbps = nats_per_w_to_gbps_per_w(ee_nats, bw);
        assert_relative_eq!(gbps, bw / std::f64::consts::LN_2 * ee_nats * 1e-9, max_relative = 1e-15);
    }

    #[test]
    fn identity_precoder_power_counts_columns() {
        let w = precoder(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 2, 2);
        assert_eq!(total_power(&w), 2.0);
    }

    #[test]
    fn sinr_is_invariant_to_joint_power_noise_scaling() {
        for seed in 0..20u64 {
            let (h, w) = random_instance(seed, 3, 4);
            let scale = 1.0 + seed as f64 / 3.0;
            let scaled =
                Precoder::new(w.matrix().map(|x| x * Complex64::new(scale, 0.0))).unwrap();
            let base = sinr(&h, &w, 0.7).unwrap();
            let joint = sinr(&h, &scaled, 0.7 * scale * scale).unwrap();
            for (a, b) in base.iter().zip(&joint) {
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn ee_is_invariant_to_per_column_phase_rotation() {
        for seed in 0..20u64 {
            let (h, w) = random_instance(100 + seed, 4, 4);
            let mut rotated = w.matrix().clone();
            for k in 0..4 {
                let phase = Complex64::from_polar(1.0, 0.4 + k as f64);
                for m in 0..4 {
                    rotated[(m, k)] *= phase;
                }
            }
            let rotated = Precoder::new(rotated).unwrap();
            let a = energy_efficiency(&h, &w, 0.5, &[1.0; 4], 1.0).unwrap();
            let b = energy_efficiency(&h, &rotated, 0.5, &[1.0; 4], 1.0).unwrap();
            assert_relative_eq!(a.ee_nats_per_w, b.ee_nats_per_w, max_relative = 1e-12);
        }
    }

    #[test]
    fn feasibility_reports_slacks_and_violations() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let w = precoder(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 2, 2);
        let report = check_feasible(&h, &w, 1.0, 4.0, &[0.5, 0.5]).unwrap();
        assert!(report.is_feasible());
        assert_relative_eq!(report.power_slack_w, 2.0, max_relative = 1e-12);
        assert_relative_eq!(report.min_sinr_slack(), 0.5, max_relative = 1e-12);
        assert!(report.violated_users(1e-9).is_empty());

        let tight = check_feasible(&h, &w, 1.0, 2.0, &[1.0, 1.0]).unwrap();
        assert!(tight.is_feasible(), "boundary point must count as feasible");

        let over = check_feasible(&h, &w, 1.0, 1.5, &[0.5, 2.0]).unwrap();
        assert!(!over.is_feasible());
        assert_eq!(over.violated_users(1e-9), vec![1]);
        assert!(over.power_slack_w < 0.0);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let h = DMatrix::from_element(2, 3, c(1.0, 0.0));
        let w = precoder(&[c(1.0, 0.0); 4], 2, 2);
        assert!(sinr(&h, &w, 1.0).is_err());
        let w_ok = precoder(&[c(1.0, 0.0); 6], 3, 2);
        assert!(sinr(&h, &w_ok, 1.0).is_ok());
        assert!(energy_efficiency(&h, &w_ok, 1.0, &[1.0], 1.0).is_err());
        assert!(check_feasible(&h, &w_ok, 1.0, 1.0, &[0.0]).is_err());
        assert!(sinr(&h, &w_ok, 0.0).is_err(), "zero noise must be rejected");
    }

    #[test]
    fn empirical_sinr_matches_analytic_orthogonal_case() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let w = precoder(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.5, 0.0)], 2, 2);
        let analytic = sinr(&h, &w, 1.0).unwrap();
        for (user, &exact) in analytic.iter().enumerate() {
            let est = empirical_sinr(&h, &w, 1.0, user, 100_000, 91).unwrap();
            let rel = (est - exact).abs() / exact;
            assert!(
                rel < 0.05,
                "user {user}: empirical {est} vs analytic {exact} (rel {rel})"
            );
        }
    }

    #[test]
    fn empirical_sinr_matches_analytic_with_interference() {
        let (h, w) = random_instance(17, 4, 4);
        let analytic = sinr(&h, &w, 0.8).unwrap();
        for (user, &exact) in analytic.iter().enumerate() {
            let est = empirical_sinr(&h, &w, 0.8, user, 100_000, 1234 + user as u64).unwrap();
            let rel = (est - exact).abs() / exact;
            assert!(
                rel < 0.05,
                "user {user}: empirical {est} vs analytic {exact} (rel {rel})"
            );
        }
    }

    #[test]
    fn empirical_sinr_is_deterministic_in_seed() {
        let (h, w) = random_instance(3, 2, 2);
        let a = empirical_sinr(&h, &w, 1.0, 0, 1000, 5).unwrap();
        let b = empirical_sinr(&h, &w, 1.0, 0, 1000, 5).unwrap();
        assert_eq!(a, b);
    }
}
