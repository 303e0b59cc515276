//! Search and audit helpers for the test suites.
//!
//! Everything here recomputes quantities from first principles with plain
//! loops — deliberately sharing no code with the crates under test — so
//! expected values in tests come from an independent path.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// scalar and planar maximization
// ---------------------------------------------------------------------------

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
/// Returns `(argmax, max)` with the argmax bracketed to width `tol`.
///
/// Like any derivative-free method, this cannot locate a smooth peak
/// better than about `sqrt(machine epsilon)` times its scale, however
/// small `tol` is; the peak *value* converges quadratically faster.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    assert!(hi > lo, "expected a nonempty interval, got [{lo}, {hi}]");
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    (x, fx)
}

/// Exhaustive maximization over an evenly spaced grid with `steps + 1`
/// points. Returns `(argmax, max)`.
pub fn grid_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    assert!(steps > 0, "expected at least one step, got {steps}");
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Maximization over the complex plane by repeatedly refining a square
/// grid around the running argmax. Each refinement shrinks the square by
/// 10x, so the final argmax is located to about `radius * 10^-levels`.
pub fn complex_grid_max<F: Fn(Complex64) -> f64>(
    f: F,
    center: Complex64,
    radius: f64,
    steps_per_axis: usize,
    levels: usize,
) -> (Complex64, f64) {
    assert!(steps_per_axis >= 2, "need a 2-D grid, got {steps_per_axis} steps");
    let mut center = center;
    let mut radius = radius;
    let mut best = (center, f(center));
    for _ in 0..levels {
        for i in 0..=steps_per_axis {
            for j in 0..=steps_per_axis {
                let re = center.re - radius + 2.0 * radius * i as f64 / steps_per_axis as f64;
                let im = center.im - radius + 2.0 * radius * j as f64 / steps_per_axis as f64;
                let z = Complex64::new(re, im);
                let fz = f(z);
                if fz > best.1 {
                    best = (z, fz);
                }
            }
        }
        center = best.0;
        radius /= 10.0;
    }
    best
}

// ---------------------------------------------------------------------------
// first-principles link audits
// ---------------------------------------------------------------------------

/// Per-user SINR computed with explicit sums:
/// `|h_k w_k|^2 / (sum_{l != k} |h_k w_l|^2 + noise)`.
pub fn sinr_audit(h: &DMatrix<Complex64>, w: &DMatrix<Complex64>, noise_power: f64) -> Vec<f64> {
    let (num_users, num_feeds) = (h.nrows(), h.ncols());
    assert_eq!(
        w.nrows(),
        num_feeds,
        "expected {} precoder rows, got {}",
        num_feeds,
        w.nrows()
    );
    assert_eq!(
        w.ncols(),
        num_users,
        "expected {} precoder columns, got {}",
        num_users,
        w.ncols()
    );
    (0..num_users)
        .map(|k| {
            let mut signal = 0.0;
            let mut disturbance = noise_power;
            for l in 0..num_users {
                let mut coupling = Complex64::new(0.0, 0.0);
                for m in 0..num_feeds {
                    coupling += h[(k, m)] * w[(m, l)];
                }
                if l == k {
                    signal = coupling.norm_sqr();
                } else {
                    disturbance += coupling.norm_sqr();
                }
            }
            signal / disturbance
        })
        .collect()
}

/// Weighted-sum-rate energy efficiency computed with explicit sums, nats/J.
pub fn efficiency_audit(
    h: &DMatrix<Complex64>,
    w: &DMatrix<Complex64>,
    noise_power: f64,
    weights: &[f64],
    static_power_w: f64,
) -> f64 {
    let rate: f64 = sinr_audit(h, w, noise_power)
        .iter()
        .zip(weights)
        .map(|(g, a)| a * (1.0 + g).ln())
        .sum();
    let mut power = static_power_w;
    for entry in w.iter() {
        power += entry.norm_sqr();
    }
    rate / power
}

/// Power and QoS slacks computed with explicit sums. Returns
/// `(budget - power, [SINR_k - threshold_k])`; negative entries are
/// violations.
pub fn constraint_slacks(
    h: &DMatrix<Complex64>,
    w: &DMatrix<Complex64>,
    noise_power: f64,
    power_budget_w: f64,
    sinr_thresholds: &[f64],
) -> (f64, Vec<f64>) {
    let mut power = 0.0;
    for entry in w.iter() {
        power += entry.norm_sqr();
    }
    let slacks = sinr_audit(h, w, noise_power)
        .iter()
        .zip(sinr_thresholds)
        .map(|(g, t)| g - t)
        .collect();
    (power_budget_w - power, slacks)
}

// ---------------------------------------------------------------------------
// deterministic random instances
// ---------------------------------------------------------------------------

/// Complex matrix with entries uniform on the unit square centered at 0.
pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

/// Complex matrix scaled so its squared Frobenius norm equals `power_w`.
pub fn random_precoder(seed: u64, feeds: usize, users: usize, power_w: f64) -> DMatrix<Complex64> {
    let mut w = random_matrix(seed, feeds, users);
    let norm_sq: f64 = w.iter().map(|v| v.norm_sqr()).sum();
    w.scale_mut((power_w / norm_sq).sqrt());
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn golden_section_finds_a_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 2.0) * (x - 2.0) + 3.0, 0.0, 5.0, 1e-10);
        // the argmax is limited by sqrt(machine epsilon), the value is not
        assert_relative_eq!(x, 2.0, epsilon = 1e-6);
        assert_relative_eq!(fx, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_max_hits_an_on_grid_peak() {
        let (x, fx) = grid_max(|x| -(x - 0.5) * (x - 0.5), 0.0, 1.0, 10);
        assert_relative_eq!(x, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fx, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn complex_grid_homes_in_on_a_planar_peak() {
        let target = Complex64::new(1.0, -2.0);
        let (z, _) = complex_grid_max(
            |z| -(z - target).norm_sqr(),
            Complex64::new(0.0, 0.0),
            4.0,
            40,
            4,
        );
        assert!(
            (z - target).norm() < 1e-3,
            "expected argmax near {target}, got {z}"
        );
    }

    #[test]
    fn audits_agree_with_hand_computation() {
        // h = [1 0; 0 2], w = [1 1; 0 1]: user 0 sees signal 1,
        // interference |1|^2; user 1 sees signal |2|^2, no interference
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])
            .map(|v| Complex64::new(v, 0.0));
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])
            .map(|v| Complex64::new(v, 0.0));
        let sinr = sinr_audit(&h, &w, 1.0);
        assert_relative_eq!(sinr[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(sinr[1], 4.0, epsilon = 1e-15);

        let ee = efficiency_audit(&h, &w, 1.0, &[1.0, 1.0], 2.0);
        let expected = (1.5f64.ln() + 5.0f64.ln()) / 5.0;
        assert_relative_eq!(ee, expected, epsilon = 1e-15);

        let (power_slack, sinr_slacks) = constraint_slacks(&h, &w, 1.0, 4.0, &[0.4, 5.0]);
        assert_relative_eq!(power_slack, 1.0, epsilon = 1e-15);
        assert_relative_eq!(sinr_slacks[0], 0.1, epsilon = 1e-15);
        assert_relative_eq!(sinr_slacks[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_precoder_hits_the_requested_power() {
        let w = random_precoder(9, 4, 3, 2.5);
        let power: f64 = w.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(power, 2.5, max_relative = 1e-12);
    }
}
