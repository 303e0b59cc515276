//! Solver-agnostic conic program in standard form, plus one interior-point
//! backend.
//!
//! A program is
//!
//! ```text
//! minimize    c' x + constant
//! subject to  A x + s = b,   s in K
//! ```
//!
//! where `K` is the product of the declared cone blocks in order. Rows are
//! stated in slack form: each block row contributes `s_i = b_i - a_i' x`,
//! and the block's slack vector must lie in its cone.
//!
//! The backend is the Clarabel interior-point method. Rotated second-order
//! blocks are lowered to plain second-order blocks at that boundary via
//! `(a, b, y) -> (a + b, a - b, sqrt(2) y)`; everything else maps one to
//! one.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// program
// ---------------------------------------------------------------------------

/// One cone block of the constraint slack vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cone {
    /// `s >= 0` componentwise.
    Nonnegative(usize),
    /// `s = (t, y)` with `t >= |y|`.
    SecondOrder(usize),
    /// `s = (a, b, y)` with `2 a b >= |y|^2` and `a, b >= 0`.
    RotatedSecondOrder(usize),
    /// `s = (x, y, z)` with `y exp(x/y) <= z`, `y > 0`.
    Exponential,
}

impl Cone {
    pub fn dim(&self) -> usize {
        match self {
            Cone::Nonnegative(d) | Cone::SecondOrder(d) | Cone::RotatedSecondOrder(d) => *d,
            Cone::Exponential => 3,
        }
    }

    fn label(&self) -> String {
        match self {
            Cone::Nonnegative(d) => format!("nonnegative({d})"),
            Cone::SecondOrder(d) => format!("second_order({d})"),
            Cone::RotatedSecondOrder(d) => format!("rotated_second_order({d})"),
            Cone::Exponential => "exponential(3)".to_string(),
        }
    }
}

/// One constraint row in slack form: `s = rhs - sum coeff * x[var]`.
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row { coeffs, rhs }
    }

    /// Row with no variable entries, pinning the slack to a constant.
    pub fn constant(rhs: f64) -> Self {
        Row { coeffs: Vec::new(), rhs }
    }
}

/// Conic program in standard form with named variables.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    var_names: Vec<String>,
    objective: Vec<f64>,
    objective_constant: f64,
    rows: Vec<Row>,
    cones: Vec<Cone>,
}

impl ConeProgram {
    pub fn new(var_names: Vec<String>) -> Self {
        let n = var_names.len();
        ConeProgram {
            var_names,
            objective: vec![0.0; n],
            objective_constant: 0.0,
            rows: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    /// Sets the minimization objective `c' x + constant`.
    pub fn set_objective(&mut self, coeffs: &[(usize, f64)], constant: f64) {
        self.objective = vec![0.0; self.num_vars()];
        for &(var, coeff) in coeffs {
            assert!(var < self.num_vars(), "objective variable {var} out of range");
            self.objective[var] += coeff;
        }
        self.objective_constant = constant;
    }

    /// Appends one cone block; `rows.len()` must equal the cone dimension.
    pub fn push_block(&mut self, cone: Cone, rows: Vec<Row>) {
        assert_eq!(
            rows.len(),
            cone.dim(),
            "block rows do not match {} dimension",
            cone.label()
        );
        for row in &rows {
            for &(var, _) in &row.coeffs {
                assert!(var < self.num_vars(), "row variable {var} out of range");
            }
        }
        self.rows.extend(rows);
        self.cones.push(cone);
    }

    /// Objective value `c' x + constant` at a candidate point.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.objective_constant
    }

    /// Plain-text standard form: variable list, objective, cone blocks, and
    /// triplet affine data.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "minimize c'x + k  s.t.  A x + s = b,  s in K").unwrap();
        writeln!(out, "variables ({}):", self.num_vars()).unwrap();
        for (i, name) in self.var_names.iter().enumerate() {
            writeln!(out, "  x[{i}] = {name}").unwrap();
        }
        writeln!(out, "objective constant k = {}", self.objective_constant).unwrap();
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                writeln!(out, "  c[{i}] = {c}").unwrap();
            }
        }
        writeln!(out, "cones ({}):", self.cones.len()).unwrap();
        let mut base = 0;
        for cone in &self.cones {
            writeln!(
                out,
                "  rows {}..{}: {}",
                base,
                base + cone.dim(),
                cone.label()
            )
            .unwrap();
            base += cone.dim();
        }
        writeln!(out, "A triplets (row, col, value) and b:").unwrap();
        for (i, row) in self.rows.iter().enumerate() {
            for &(var, coeff) in &row.coeffs {
                writeln!(out, "  ({i}, {var}, {coeff})").unwrap();
            }
            if row.rhs != 0.0 {
                writeln!(out, "  b[{i}] = {}", row.rhs).unwrap();
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let cone_rows: usize = self.cones.iter().map(Cone::dim).sum();
        if cone_rows != self.rows.len() {
            return Err(Error::Backend(format!(
                "cone dimensions cover {cone_rows} rows but {} rows are present",
                self.rows.len()
            )));
        }
        for row in &self.rows {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|(_, c)| !c.is_finite()) {
                return Err(Error::Backend("non-finite constraint data".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Backend("non-finite objective".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// backend
// ---------------------------------------------------------------------------

/// Termination class of one backend run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendStatus {
    /// KKT residuals and duality gap within tolerance.
    Optimal,
    /// Iteration budget exhausted before a certificate.
    MaxIter,
    /// Primal infeasibility certificate found.
    Infeasible,
    /// Numerical breakdown, unboundedness certificate, or a
    /// reduced-accuracy result.
    NumericalFailure,
}

/// Result of one backend run; `x` and `objective` carry the final iterate
/// only when `status` is [`BackendStatus::Optimal`].
#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub status: BackendStatus,
    pub x: Vec<f64>,
    /// `c' x + constant` in the minimization sense.
    pub objective: f64,
    pub iterations: u32,
}

/// Lowered constraint data with rotated blocks rewritten as plain
/// second-order blocks.
fn lower(program: &ConeProgram) -> (Vec<Row>, Vec<SupportedConeT<f64>>) {
    let mut rows: Vec<Row> = Vec::with_capacity(program.rows.len());
    let mut cones = Vec::with_capacity(program.cones.len());
    let mut base = 0;
    for cone in &program.cones {
        let dim = cone.dim();
        let block = &program.rows[base..base + dim];
        match cone {
            Cone::Nonnegative(d) => {
                rows.extend_from_slice(block);
                cones.push(SupportedConeT::NonnegativeConeT(*d));
            }
            Cone::SecondOrder(d) => {
                rows.extend_from_slice(block);
                cones.push(SupportedConeT::SecondOrderConeT(*d));
            }
            Cone::Exponential => {
                rows.extend_from_slice(block);
                cones.push(SupportedConeT::ExponentialConeT());
            }
            Cone::RotatedSecondOrder(d) => {
                let a = &block[0];
                let b = &block[1];
                let mut sum = a.coeffs.clone();
                sum.extend(b.coeffs.iter().copied());
                rows.push(Row::new(sum, a.rhs + b.rhs));
                let mut diff = a.coeffs.clone();
                diff.extend(b.coeffs.iter().map(|&(v, c)| (v, -c)));
                rows.push(Row::new(diff, a.rhs - b.rhs));
                let sqrt2 = std::f64::consts::SQRT_2;
                for row in &block[2..] {
                    rows.push(Row::new(
                        row.coeffs.iter().map(|&(v, c)| (v, sqrt2 * c)).collect(),
                        sqrt2 * row.rhs,
                    ));
                }
                cones.push(SupportedConeT::SecondOrderConeT(*d));
            }
        }
        base += dim;
    }
    (rows, cones)
}

/// Compressed-sparse-column form of the lowered row data.
fn to_csc(rows: &[Row], num_vars: usize) -> CscMatrix<f64> {
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_vars];
    for (i, row) in rows.iter().enumerate() {
        for &(var, coeff) in &row.coeffs {
            cols[var].push((i, coeff));
        }
    }
    let mut colptr = Vec::with_capacity(num_vars + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for col in &mut cols {
        col.sort_by_key(|(r, _)| *r);
        // merge duplicate (row, col) entries
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
        for &(r, v) in col.iter() {
            match merged.last_mut() {
                Some((last_r, last_v)) if *last_r == r => *last_v += v,
                _ => merged.push((r, v)),
            }
        }
        for (r, v) in merged {
            rowval.push(r);
            nzval.push(v);
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(rows.len(), num_vars, colptr, rowval, nzval)
}

/// Solves the program with the interior-point backend.
///
/// `tol` is applied to the feasibility residuals and the absolute and
/// relative duality gap; `max_iter` bounds interior-point iterations.
pub fn solve(program: &ConeProgram, tol: f64, max_iter: usize) -> Result<ConeSolution> {
    program.validate()?;
    let (rows, cones) = lower(program);
    let a = to_csc(&rows, program.num_vars());
    let b: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
    let n = program.num_vars();
    let p = CscMatrix::new(n, n, vec![0; n + 1], Vec::new(), Vec::new());

    let settings = DefaultSettings {
        verbose: false,
        max_iter: max_iter as u32,
        tol_gap_abs: tol,
        tol_gap_rel: tol,
        tol_feas: tol,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &program.objective, &a, &b, &cones, settings)
        .map_err(|e| Error::Backend(e.to_string()))?;
    solver.solve();

    let status = match solver.solution.status {
        SolverStatus::Solved => BackendStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            BackendStatus::Infeasible
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => BackendStatus::MaxIter,
        _ => BackendStatus::NumericalFailure,
    };
    let x = solver.solution.x.clone();
    let objective = match status {
        BackendStatus::Optimal => program.objective_at(&x),
        _ => f64::NAN,
    };
    Ok(ConeSolution {
        status,
        x,
        objective,
        iterations: solver.solution.iterations,
    })
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
