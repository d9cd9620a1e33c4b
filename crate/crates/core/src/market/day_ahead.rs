use vof_lp::{solve_lp, LinearProgram, LpStatus};

use super::{check_day_inputs, MarketError, MarketSpec, DA_BALANCE_SIGN};

/// Column of generator `i` at hour `tau`.
#[inline]
pub(crate) fn x_col(spec: &MarketSpec, tau: usize, i: usize) -> usize {
    tau * spec.num_gens() + i
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayAheadResult {
    /// `schedule[τ][i]`, kW.
    pub schedule: Vec<Vec<f64>>,
    pub cost: f64,
    /// Balance duals λ_τ ($/kW).
    pub lambda: Vec<f64>,
    /// Capacity duals δ_{τ,i} ≥ 0.
    pub cap_duals: Vec<Vec<f64>>,
    /// Duals of `x_{τ+1} - x_τ ≤ r`, indexed `[τ][i]` for τ in `0..T-1`.
    pub ramp_up_duals: Vec<Vec<f64>>,
    /// Duals of `x_τ - x_{τ+1} ≤ r`.
    pub ramp_down_duals: Vec<Vec<f64>>,
    /// Terminal simplex basis, used to detect basis changes.
    pub basis: Vec<usize>,
}

/// Dispatch LP over `x[τ][i]`; rows are the T balance equalities followed
/// by (when ramps are set) the up-ramp rows then the down-ramp rows, each
/// ordered by `(τ, i)`.
pub fn build_day_ahead(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> Result<LinearProgram, MarketError> {
    check_day_inputs(spec, forecast, load)?;
    Ok(dispatch_lp(spec, forecast, load))
}

pub(crate) fn dispatch_lp(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> LinearProgram {
    let g = spec.num_gens();
    let t = spec.horizon;
    let mut lp = LinearProgram::new(g * t);
    for tau in 0..t {
        for i in 0..g {
            let j = x_col(spec, tau, i);
            lp.set_cost(j, spec.gen_costs[i]);
            lp.set_bounds(j, 0.0, spec.gen_caps[i]);
        }
    }
    for tau in 0..t {
        let terms: Vec<(usize, f64)> = (0..g).map(|i| (x_col(spec, tau, i), DA_BALANCE_SIGN)).collect();
        lp.add_eq_terms(&terms, DA_BALANCE_SIGN * (load[tau] - forecast[tau]));
    }
    if let Some(r) = &spec.ramps {
        for sign in [1.0, -1.0] {
            for tau in 0..t.saturating_sub(1) {
                for i in 0..g {
                    let terms = [(x_col(spec, tau + 1, i), sign), (x_col(spec, tau, i), -sign)];
                    lp.add_le_terms(&terms, r[i]);
                }
            }
        }
    }
    lp
}

pub fn solve_day_ahead(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> Result<DayAheadResult, MarketError> {
    let lp = build_day_ahead(spec, forecast, load)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(MarketError::Infeasible("day-ahead schedule violates ramp limits".into()))
        }
        LpStatus::Unbounded => return Err(MarketError::Infeasible("day-ahead dispatch is unbounded".into())),
    }
    let g = spec.num_gens();
    let t = spec.horizon;
    let schedule = sol.x.chunks(g).map(<[f64]>::to_vec).collect();
    let cap_duals = sol.upper_duals.chunks(g).map(<[f64]>::to_vec).collect();
    let lambda = sol.eq_duals.iter().map(|y| DA_BALANCE_SIGN * y).collect();
    let (ramp_up_duals, ramp_down_duals) = if spec.ramps.is_some() && t > 1 {
        let half = (t - 1) * g;
        let split = |s: &[f64]| s.chunks(g).map(<[f64]>::to_vec).collect::<Vec<_>>();
        (split(&sol.ineq_duals[..half]), split(&sol.ineq_duals[half..]))
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(DayAheadResult {
        schedule,
        cost: sol.objective,
        lambda,
        cap_duals,
        ramp_up_duals,
        ramp_down_duals,
        basis: sol.basis,
    })
}
