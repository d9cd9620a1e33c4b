//! Exact small/medium LP solving with dual certificates.
//!
//! [`solve_lp`] runs a dense bounded-variable revised simplex and returns
//! the primal point together with the duals of the terminal basis.
//! [`solve_milp`] layers a depth-first branch-and-bound on top for problems
//! with binary (or general integer) variables.
//!
//! # Dual sign convention
//!
//! For `min c·v` s.t. `A_eq v = b_eq`, `A_ub v <= b_ub`, `l <= v <= u`:
//!
//! * `eq_duals` are free and measure `d(objective)/d(b_eq)`;
//! * `ineq_duals` are `>= 0` and measure `-d(objective)/d(b_ub)`;
//! * `lower_duals`/`upper_duals` are `>= 0` multipliers of the bounds.
//!
//! At an optimum the stationarity condition reads
//! `c - A_eqᵀ y + A_ubᵀ w - lower_duals + upper_duals = 0` and strong
//! duality reads
//! `c·v* = b_eq·y - b_ub·w + Σ lower_duals·l - Σ upper_duals·u`.

mod certificate;
mod dump;
mod milp;
mod problem;
mod simplex;

pub use certificate::{check_certificate, Certificate};
pub use dump::to_debug_text;
pub use milp::{solve_milp, solve_milp_with, MilpError, MilpOptions, MilpSolution};
pub use problem::{LinearProgram, Row};

use thiserror::Error;

/// Absolute and relative tolerance applied to feasibility, duality gap and
/// complementary slackness checks.
pub const TOL: f64 = 1e-8;
/// Integrality tolerance for branch-and-bound.
pub const TOL_INT: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("MalformedProblem: {0}")]
    MalformedProblem(String),
    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal solution plus the dual certificate of the terminal basis.
///
/// All vectors are empty unless `status` is [`LpStatus::Optimal`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    /// Sorted column indices of the terminal basis. Columns `0..n` are the
    /// structural variables, `n..n + m_ub` the inequality slacks, anything
    /// beyond is an artificial left in the basis at zero.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl LpSolution {
    fn without_certificate(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            eq_duals: Vec::new(),
            ineq_duals: Vec::new(),
            lower_duals: Vec::new(),
            upper_duals: Vec::new(),
            basis: Vec::new(),
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Objective of the dual evaluated at the returned multipliers.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut obj = 0.0;
        for (row, y) in lp.eq_rows.iter().zip(&self.eq_duals) {
            obj += row.rhs * y;
        }
        for (row, w) in lp.ub_rows.iter().zip(&self.ineq_duals) {
            obj -= row.rhs * w;
        }
        for j in 0..lp.num_vars() {
            if self.lower_duals[j] != 0.0 && lp.lower[j].is_finite() {
                obj += self.lower_duals[j] * lp.lower[j];
            }
            if self.upper_duals[j] != 0.0 && lp.upper[j].is_finite() {
                obj -= self.upper_duals[j] * lp.upper[j];
            }
        }
        obj
    }
}

/// Solves `lp` to optimality or classifies it as infeasible/unbounded.
///
/// Infeasible and unbounded instances are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and
/// numerical breakdown.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    simplex::solve(lp, &lp.lower, &lp.upper)
}

/// Like [`solve_lp`] but with the variable bounds replaced.
pub(crate) fn solve_lp_with_bounds(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Result<LpSolution, LpError> {
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Ok(LpSolution::without_certificate(LpStatus::Infeasible, 0));
    }
    simplex::solve(lp, lower, upper)
}
