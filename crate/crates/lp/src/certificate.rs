use crate::problem::{dot, LinearProgram};
use crate::LpSolution;

/// Residuals of an optimality certificate, recomputed from the problem data
/// alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest violation of any row or bound.
    pub primal_residual: f64,
    /// Largest sign violation of a multiplier plus the largest stationarity
    /// residual `|c - A_eqᵀy + A_ubᵀw - lower + upper|`.
    pub dual_residual: f64,
    /// `|primal objective - dual objective|`.
    pub gap: f64,
    /// Largest `multiplier × slack` product over inequality rows and bounds.
    pub complementarity: f64,
}

impl Certificate {
    /// Checks every residual against `tol · (1 + scale)` where `scale` is the
    /// magnitude of the objective.
    pub fn holds(&self, objective: f64, tol: f64) -> bool {
        let t = tol * (1.0 + objective.abs());
        self.primal_residual <= t && self.dual_residual <= t && self.gap <= t && self.complementarity <= t
    }
}

pub fn check_certificate(lp: &LinearProgram, sol: &LpSolution) -> Certificate {
    let n = lp.num_vars();
    let x = &sol.x;
    let mut primal: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let mut dual: f64 = 0.0;

    for row in &lp.eq_rows {
        primal = primal.max((dot(&row.coeffs, x) - row.rhs).abs());
    }
    for (row, &w) in lp.ub_rows.iter().zip(&sol.ineq_duals) {
        let slack = row.rhs - dot(&row.coeffs, x);
        primal = primal.max(-slack);
        comp = comp.max((w * slack).abs());
        dual = dual.max(-w);
    }
    let mut stationarity = lp.objective.clone();
    for (row, &y) in lp.eq_rows.iter().zip(&sol.eq_duals) {
        for (s, &a) in stationarity.iter_mut().zip(&row.coeffs) {
            *s -= a * y;
        }
    }
    for (row, &w) in lp.ub_rows.iter().zip(&sol.ineq_duals) {
        for (s, &a) in stationarity.iter_mut().zip(&row.coeffs) {
            *s += a * w;
        }
    }
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let (zl, zu) = (sol.lower_duals[j], sol.upper_duals[j]);
        if lo.is_finite() {
            primal = primal.max(lo - x[j]);
            comp = comp.max((zl * (x[j] - lo)).abs());
        } else {
            dual = dual.max(zl.abs());
        }
        if hi.is_finite() {
            primal = primal.max(x[j] - hi);
            comp = comp.max((zu * (hi - x[j])).abs());
        } else {
            dual = dual.max(zu.abs());
        }
        dual = dual.max(-zl).max(-zu);
        dual = dual.max((stationarity[j] - zl + zu).abs());
    }

    Certificate {
        primal_residual: primal.max(0.0),
        dual_residual: dual.max(0.0),
        gap: (lp.objective_value(x) - sol.dual_objective(lp)).abs(),
        complementarity: comp,
    }
}
