//! Convex inner step of the alternating optimizer.
//!
//! With the auxiliaries `(mu, z)` frozen, maximizing the surrogate over
//! the precoder is convex. In epigraph form the program is
//!
//! ```text
//! maximize   2 mu t - mu^2 (p + P_0)
//! over       W (real/imag parts), beta, gamma, r, s, t, p
//! subject to t >= 0,  t^2 <= s                    (rotated second-order)
//!            s <= sum_k alpha_k r_k               (linear)
//!            0 <= r_k <= log(1 + gamma_k)         (exponential + linear)
//!            |W|_F^2 <= p <= P_T                  (second-order + linear)
//!            sum_{l != k} |h_k w_l|^2 + sigma^2 <= beta_k   (second-order)
//!            Gamma_k <= gamma_k                   (linear)
//!            gamma_k <= 2 Re(conj(z_k) h_k w_k) - |z_k|^2 beta_k  (linear)
//! ```
//!
//! which transcribes to the standard form of [`crate::conic`] with complex
//! data expanded into real and imaginary parts. A squared norm `|y|^2 <= u`
//! is written as the plain second-order row group
//! `((u + 1)/2, (u - 1)/2, y)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conic::{self, BackendStatus, Cone, ConeProgram, Row};
use crate::error::{Error, Result};
use crate::metrics::Precoder;
use crate::qtransform::AuxiliaryState;

/// Default interior-point tolerance for the inner step.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Default interior-point iteration budget for the inner step.
pub const DEFAULT_MAX_ITER: usize = 200;

// ---------------------------------------------------------------------------
// instance and layout
// ---------------------------------------------------------------------------

/// Data of one inner step: channel, scenario scalars, and frozen
/// auxiliaries.
#[derive(Debug, Clone)]
pub struct SubproblemInstance<'a> {
    pub h: &'a DMatrix<Complex64>,
    pub noise_power: f64,
    pub weights: &'a [f64],
    pub sinr_thresholds: &'a [f64],
    pub total_power_w: f64,
    pub static_power_w: f64,
    pub aux: &'a AuxiliaryState,
}

/// Variable offsets of the real-form decision vector.
///
/// Order: `w_re/w_im` interleaved per user column (all real parts of a
/// column, then all imaginary parts), then `beta`, `gamma`, `r`, and the
/// scalars `s`, `t`, `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    num_feeds: usize,
    num_users: usize,
}

impl Layout {
    fn w_re(&self, m: usize, k: usize) -> usize {
        2 * self.num_feeds * k + m
    }
    fn w_im(&self, m: usize, k: usize) -> usize {
        2 * self.num_feeds * k + self.num_feeds + m
    }
    fn num_w(&self) -> usize {
        2 * self.num_feeds * self.num_users
    }
    fn beta(&self, k: usize) -> usize {
        self.num_w() + k
    }
    fn gamma(&self, k: usize) -> usize {
        self.num_w() + self.num_users + k
    }
    fn r(&self, k: usize) -> usize {
        self.num_w() + 2 * self.num_users + k
    }
    fn s(&self) -> usize {
        self.num_w() + 3 * self.num_users
    }
    fn t(&self) -> usize {
        self.s() + 1
    }
    fn p(&self) -> usize {
        self.s() + 2
    }
    fn num_vars(&self) -> usize {
        self.s() + 3
    }
}

/// Transcribed inner step: the standard-form program plus the metadata
/// needed to evaluate and recover solutions.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    program: ConeProgram,
    layout: Layout,
    mu: f64,
    static_power_w: f64,
    weights: Vec<f64>,
}

impl ConicProgram {
    /// Solver-facing standard form.
    pub fn standard_form(&self) -> &ConeProgram {
        &self.program
    }

    /// Plain-text dump of the standard form for debugging.
    pub fn dump(&self) -> String {
        self.program.dump()
    }

    /// Maximization-sense objective `2 mu t - mu^2 (p + P_0)` at a raw
    /// solution vector.
    pub fn maximized_objective_at(&self, x: &[f64]) -> f64 {
        -self.program.objective_at(x)
    }

    /// Full surrogate value recomputed from recovered quantities:
    /// `2 mu sqrt(sum_k alpha_k log(1 + gamma_k)) - mu^2 (|W|^2 + P_0)`.
    fn objective_from_parts(&self, gamma: &[f64], power: f64) -> f64 {
        let rate_sum: f64 = gamma
            .iter()
            .zip(&self.weights)
            .map(|(g, a)| a * (1.0 + g).ln())
            .sum();
        2.0 * self.mu * rate_sum.max(0.0).sqrt() - self.mu * self.mu * (power + self.static_power_w)
    }
}

// ---------------------------------------------------------------------------
// transcription
// ---------------------------------------------------------------------------

fn validate_instance(inst: &SubproblemInstance<'_>) -> Result<Layout> {
    let (k, m) = (inst.h.nrows(), inst.h.ncols());
    if k == 0 || m == 0 {
        return Err(Error::DimensionMismatch("empty channel".into()));
    }
    if inst.weights.len() != k || inst.sinr_thresholds.len() != k || inst.aux.z.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "channel has {k} users; got {} weights, {} thresholds, {} auxiliaries",
            inst.weights.len(),
            inst.sinr_thresholds.len(),
            inst.aux.z.len()
        )));
    }
    if !(inst.noise_power > 0.0 && inst.noise_power.is_finite()) {
        return Err(Error::InvalidScenario("noise power must be positive".into()));
    }
    if !(inst.total_power_w > 0.0 && inst.total_power_w.is_finite()) {
        return Err(Error::InvalidScenario("power budget must be positive".into()));
    }
    if !(inst.static_power_w > 0.0 && inst.static_power_w.is_finite()) {
        return Err(Error::InvalidScenario("static power must be positive".into()));
    }
    if !(inst.aux.mu >= 0.0 && inst.aux.mu.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "ratio auxiliary must be nonnegative and finite, got {}",
            inst.aux.mu
        )));
    }
    if inst.aux.z.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidScenario("SINR auxiliaries must be finite".into()));
    }
    if inst
        .sinr_thresholds
        .iter()
        .any(|&g| !(g >= 0.0 && g.is_finite()))
    {
        return Err(Error::InvalidScenario("thresholds must be nonnegative".into()));
    }
    if inst.weights.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidScenario("weights must be nonnegative".into()));
    }
    Ok(Layout {
        num_feeds: m,
        num_users: k,
    })
}

fn var_names(layout: &Layout) -> Vec<String> {
    let mut names = Vec::with_capacity(layout.num_vars());
    for k in 0..layout.num_users {
        for m in 0..layout.num_feeds {
            names.push(format!("w_re[{m},{k}]"));
        }
        for m in 0..layout.num_feeds {
            names.push(format!("w_im[{m},{k}]"));
        }
    }
    for k in 0..layout.num_users {
        names.push(format!("beta[{k}]"));
    }
    for k in 0..layout.num_users {
        names.push(format!("gamma[{k}]"));
    }
    for k in 0..layout.num_users {
        names.push(format!("r[{k}]"));
    }
    names.push("s".into());
    names.push("t".into());
    names.push("p".into());
    names
}

/// Builds the standard-form conic program for one inner step.
pub fn transcribe(inst: &SubproblemInstance<'_>) -> Result<ConicProgram> {
    let layout = validate_instance(inst)?;
    let (nk, nm) = (layout.num_users, layout.num_feeds);
    let mut program = ConeProgram::new(var_names(&layout));

    let mu = inst.aux.mu;
    program.set_objective(
        &[(layout.t(), -2.0 * mu), (layout.p(), mu * mu)],
        mu * mu * inst.static_power_w,
    );

    // linear block
    let mut linear = Vec::with_capacity(3 * nk + 3);
    linear.push(Row::new(vec![(layout.p(), 1.0)], inst.total_power_w));
    for k in 0..nk {
        linear.push(Row::new(
            vec![(layout.gamma(k), -1.0)],
            -inst.sinr_thresholds[k],
        ));
    }
    for k in 0..nk {
        // gamma_k - 2 Re(conj(z_k) h_k w_k) + |z_k|^2 beta_k <= 0
        let z = inst.aux.z[k];
        let mut coeffs = vec![(layout.gamma(k), 1.0), (layout.beta(k), z.norm_sqr())];
        for m in 0..nm {
            let c = z.conj() * inst.h[(k, m)];
            coeffs.push((layout.w_re(m, k), -2.0 * c.re));
            coeffs.push((layout.w_im(m, k), 2.0 * c.im));
        }
        linear.push(Row::new(coeffs, 0.0));
    }
    {
        let mut coeffs = vec![(layout.s(), 1.0)];
        for k in 0..nk {
            coeffs.push((layout.r(k), -inst.weights[k]));
        }
        linear.push(Row::new(coeffs, 0.0));
    }
    linear.push(Row::new(vec![(layout.t(), -1.0)], 0.0));
    for k in 0..nk {
        linear.push(Row::new(vec![(layout.r(k), -1.0)], 0.0));
    }
    let linear_dim = linear.len();
    program.push_block(Cone::Nonnegative(linear_dim), linear);

    // t^2 <= s as the rotated block (s, 1/2, t)
    program.push_block(
        Cone::RotatedSecondOrder(3),
        vec![
            Row::new(vec![(layout.s(), -1.0)], 0.0),
            Row::constant(0.5),
            Row::new(vec![(layout.t(), -1.0)], 0.0),
        ],
    );

    // |W|_F^2 <= p as ((p+1)/2, (p-1)/2, vec W)
    {
        let mut rows = Vec::with_capacity(2 + layout.num_w());
        rows.push(Row::new(vec![(layout.p(), -0.5)], 0.5));
        rows.push(Row::new(vec![(layout.p(), -0.5)], -0.5));
        for j in 0..layout.num_w() {
            rows.push(Row::new(vec![(j, -1.0)], 0.0));
        }
        program.push_block(Cone::SecondOrder(2 + layout.num_w()), rows);
    }

    // per-user disturbance bound:
    // sum_{l != k} |h_k w_l|^2 + sigma^2 <= beta_k
    // as ((beta_k - sigma^2 + 1)/2, (beta_k - sigma^2 - 1)/2, couplings)
    for k in 0..nk {
        let dim = 2 + 2 * (nk - 1);
        let mut rows = Vec::with_capacity(dim);
        rows.push(Row::new(
            vec![(layout.beta(k), -0.5)],
            (1.0 - inst.noise_power) / 2.0,
        ));
        rows.push(Row::new(
            vec![(layout.beta(k), -0.5)],
            (-1.0 - inst.noise_power) / 2.0,
        ));
        for l in 0..nk {
            if l == k {
                continue;
            }
            let mut re_coeffs = Vec::with_capacity(2 * nm);
            let mut im_coeffs = Vec::with_capacity(2 * nm);
            for m in 0..nm {
                let hkm = inst.h[(k, m)];
                re_coeffs.push((layout.w_re(m, l), -hkm.re));
                re_coeffs.push((layout.w_im(m, l), hkm.im));
                im_coeffs.push((layout.w_re(m, l), -hkm.im));
                im_coeffs.push((layout.w_im(m, l), -hkm.re));
            }
            rows.push(Row::new(re_coeffs, 0.0));
            rows.push(Row::new(im_coeffs, 0.0));
        }
        program.push_block(Cone::SecondOrder(dim), rows);
    }

    // rate epigraph r_k <= log(1 + gamma_k) as (r_k, 1, 1 + gamma_k)
    for k in 0..nk {
        program.push_block(
            Cone::Exponential,
            vec![
                Row::new(vec![(layout.r(k), -1.0)], 0.0),
                Row::constant(1.0),
                Row::new(vec![(layout.gamma(k), -1.0)], 1.0),
            ],
        );
    }

    Ok(ConicProgram {
        program,
        layout,
        mu,
        static_power_w: inst.static_power_w,
        weights: inst.weights.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// solve and recovery
// ---------------------------------------------------------------------------

/// Termination class of one inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// KKT residuals and duality gap within tolerance.
    Optimal,
    /// Iteration budget exhausted.
    MaxIter,
    /// The constraint set is empty (certified).
    Infeasible,
    /// Numerical breakdown or a reduced-accuracy result.
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

/// Result of one inner solve. `beta`, `gamma`, and `objective_value` are
/// meaningful only when `status` is [`SolveStatus::Optimal`].
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub status: SolveStatus,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Maximization-sense surrogate value including the static-power term.
    pub objective_value: f64,
    pub iterations: u32,
    x: Vec<f64>,
    layout: Layout,
}

/// Runs the interior-point backend on a transcribed inner step.
pub fn solve(program: &ConicProgram, tol: f64, max_iter: usize) -> Result<SubproblemSolution> {
    let sol = conic::solve(&program.program, tol, max_iter)?;
    let status = match sol.status {
        BackendStatus::Optimal => SolveStatus::Optimal,
        BackendStatus::MaxIter => SolveStatus::MaxIter,
        BackendStatus::Infeasible => SolveStatus::Infeasible,
        BackendStatus::NumericalFailure => SolveStatus::NumericalFailure,
    };
    let layout = program.layout;
    let (beta, gamma, objective_value) = if status == SolveStatus::Optimal {
        let beta: Vec<f64> = (0..layout.num_users)
            .map(|k| sol.x[layout.beta(k)])
            .collect();
        let gamma: Vec<f64> = (0..layout.num_users)
            .map(|k| sol.x[layout.gamma(k)])
            .collect();
        let power: f64 = (0..layout.num_w()).map(|j| sol.x[j] * sol.x[j]).sum();
        let objective = program.objective_from_parts(&gamma, power);
        (beta, gamma, objective)
    } else {
        (Vec::new(), Vec::new(), f64::NAN)
    };
    Ok(SubproblemSolution {
        status,
        beta,
        gamma,
        objective_value,
        iterations: sol.iterations,
        x: sol.x,
        layout,
    })
}

/// Reassembles the complex M x K precoder from the real solution vector.
///
/// Errors with [`Error::NotOptimal`] unless the solve ended optimal.
pub fn recover_precoder(solution: &SubproblemSolution) -> Result<Precoder> {
    if solution.status != SolveStatus::Optimal {
        return Err(Error::NotOptimal(solution.status));
    }
    let layout = solution.layout;
    let w = DMatrix::from_fn(layout.num_feeds, layout.num_users, |m, k| {
        Complex64::new(
            solution.x[layout.w_re(m, k)],
            solution.x[layout.w_im(m, k)],
        )
    });
    Precoder::new(w)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    fn scalar_toy() -> (DMatrix<Complex64>, AuxiliaryState) {
        let h = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let w = Precoder::new(DMatrix::from_element(1, 1, c(1.0, 0.0))).unwrap();
        let aux = AuxiliaryState::tightened(&h, &w, 1.0, &[1.0], 1.0).unwrap();
        (h, aux)
    }

    #[test]
    fn single_user_cone_census_is_stable() {
        let (h, aux) = scalar_toy();
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0],
            sinr_thresholds: &[0.5],
            total_power_w: 4.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        let program = transcribe(&inst).unwrap();
        let cones = program.standard_form().cones();
        assert_eq!(
            cones,
            &[
                Cone::Nonnegative(6),
                Cone::RotatedSecondOrder(3),
                Cone::SecondOrder(4),
                Cone::SecondOrder(2),
                Cone::Exponential,
            ],
            "cone census changed: {cones:?}"
        );
        assert_eq!(program.standard_form().num_vars(), 2 + 3 + 3);
    }

    #[test]
    fn scalar_toy_matches_dense_grid_search() {
        // independent oracle: with z = 1 and real w the tightened surrogate
        // reduces to g(w) = 2 mu sqrt(log(2w)) - mu^2 (w^2 + 1) on the QoS
        // cap gamma = 2w - 1 >= 0.5, power w^2 <= 4
        let (h, aux) = scalar_toy();
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0],
            sinr_thresholds: &[0.5],
            total_power_w: 4.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        let mu = aux.mu;
        let mut best = f64::NEG_INFINITY;
        let mut best_w = 0.0;
        let mut w: f64 = 0.75;
        while w <= 2.0 {
            let g = 2.0 * mu * (2.0 * w).ln().sqrt() - mu * mu * (w * w + 1.0);
            if g > best {
                best = g;
                best_w = w;
            }
            w += 1e-4;
        }

        let program = transcribe(&inst).unwrap();
        let sol = solve(&program, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (sol.objective_value - best).abs() <= 1e-3,
            "solver {} vs grid {} (argmax {best_w})",
            sol.objective_value,
            best
        );
        let w = recover_precoder(&sol).unwrap();
        let entry = w.matrix()[(0, 0)];
        assert!(
            (entry.re - best_w).abs() < 1e-2 && entry.im.abs() < 1e-4,
            "recovered {entry} far from grid argmax {best_w}"
        );
    }

    #[test]
    fn solution_improves_on_its_tightening_point() {
        for seed in 0..10u64 {
            let (h, w_prev) = random_instance(400 + seed, 3, 3);
            let aux = AuxiliaryState::tightened(&h, &w_prev, 0.5, &[1.0; 3], 1.0).unwrap();
            let inst = SubproblemInstance {
                h: &h,
                noise_power: 0.5,
                weights: &[1.0; 3],
                sinr_thresholds: &[0.0; 3],
                total_power_w: metrics::total_power(&w_prev) * 1.5,
                static_power_w: 1.0,
                aux: &aux,
            };
            let ee_prev = metrics::energy_efficiency(&h, &w_prev, 0.5, &[1.0; 3], 1.0)
                .unwrap()
                .ee_nats_per_w;
            let sol = solve(&transcribe(&inst).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            assert!(
                sol.objective_value >= ee_prev - 1e-7,
                "seed {seed}: surrogate optimum {} below previous value {ee_prev}",
                sol.objective_value
            );
        }
    }

    #[test]
    fn disturbance_bound_is_tight_at_the_optimum() {
        let (h, w_prev) = random_instance(99, 3, 3);
        let aux = AuxiliaryState::tightened(&h, &w_prev, 1.0, &[1.0; 3], 1.0).unwrap();
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0; 3],
            sinr_thresholds: &[0.0; 3],
            total_power_w: 5.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        let sol = solve(&transcribe(&inst).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let w = recover_precoder(&sol).unwrap();
        let denom = metrics::interference_plus_noise(&h, &w, 1.0).unwrap();
        for (k, &d) in denom.iter().enumerate() {
            assert_relative_eq!(sol.beta[k], d, max_relative = 1e-5);
        }
    }

    #[test]
    fn unreachable_threshold_is_certified_infeasible() {
        let (h, w_prev) = random_instance(7, 2, 2);
        let aux = AuxiliaryState::tightened(&h, &w_prev, 1.0, &[1.0; 2], 1.0).unwrap();
        let p_t = 3.0;
        // single-user matched-filter bound |h_k|^2 P_T / sigma^2
        let cap = h.row(0).iter().map(|v| v.norm_sqr()).sum::<f64>() * p_t;
        let thresholds = [cap * 10.0, 0.0];
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0; 2],
            sinr_thresholds: &thresholds,
            total_power_w: p_t,
            static_power_w: 1.0,
            aux: &aux,
        };
        let sol = solve(&transcribe(&inst).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(recover_precoder(&sol).is_err());
    }

    #[test]
    fn zero_auxiliary_with_positive_threshold_is_infeasible() {
        let (h, _) = random_instance(8, 2, 2);
        let aux = AuxiliaryState {
            mu: 0.3,
            z: vec![c(0.0, 0.0); 2],
        };
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0; 2],
            sinr_thresholds: &[1.0, 1.0],
            total_power_w: 4.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        let sol = solve(&transcribe(&inst).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn recovery_round_trips_the_precoder_layout() {
        let (h, w) = random_instance(55, 3, 4);
        let aux = AuxiliaryState::tightened(&h, &w, 1.0, &[1.0; 3], 1.0).unwrap();
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0; 3],
            sinr_thresholds: &[0.0; 3],
            total_power_w: 8.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        let program = transcribe(&inst).unwrap();
        let layout = program.layout;
        let mut x = vec![0.0; layout.num_vars()];
        for k in 0..3 {
            for m in 0..4 {
                x[layout.w_re(m, k)] = w.matrix()[(m, k)].re;
                x[layout.w_im(m, k)] = w.matrix()[(m, k)].im;
            }
        }
        let fake = SubproblemSolution {
            status: SolveStatus::Optimal,
            beta: vec![0.0; 3],
            gamma: vec![0.0; 3],
            objective_value: 0.0,
            iterations: 0,
            x,
            layout,
        };
        let back = recover_precoder(&fake).unwrap();
        assert_eq!(back.matrix(), w.matrix(), "layout round trip must be exact");
    }

    #[test]
    fn transcription_validates_dimensions_and_scalars() {
        let (h, w) = random_instance(2, 2, 2);
        let aux = AuxiliaryState::tightened(&h, &w, 1.0, &[1.0; 2], 1.0).unwrap();
        let base = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0; 2],
            sinr_thresholds: &[0.0; 2],
            total_power_w: 4.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        assert!(transcribe(&base).is_ok());

        let mut inst = base.clone();
        inst.weights = &[1.0];
        assert!(transcribe(&inst).is_err());

        let mut inst = base.clone();
        inst.noise_power = 0.0;
        assert!(transcribe(&inst).is_err());

        let mut inst = base.clone();
        inst.total_power_w = -1.0;
        assert!(transcribe(&inst).is_err());

        let bad_aux = AuxiliaryState {
            mu: f64::NAN,
            z: aux.z.clone(),
        };
        let mut inst = base.clone();
        inst.aux = &bad_aux;
        assert!(transcribe(&inst).is_err());
    }

    #[test]
    fn dump_names_the_real_form_variables() {
        let (h, w) = random_instance(3, 2, 2);
        let aux = AuxiliaryState::tightened(&h, &w, 1.0, &[1.0; 2], 1.0).unwrap();
        let inst = SubproblemInstance {
            h: &h,
            noise_power: 1.0,
            weights: &[1.0; 2],
            sinr_thresholds: &[0.0; 2],
            total_power_w: 4.0,
            static_power_w: 1.0,
            aux: &aux,
        };
        let text = transcribe(&inst).unwrap().dump();
        for name in ["w_re[0,0]", "w_im[1,1]", "beta[0]", "gamma[1]", "r[0]"] {
            assert!(text.contains(name), "dump missing {name}");
        }
        assert!(text.contains("exponential(3)"));
        assert!(text.contains("rotated_second_order(3)"));
    }
}
