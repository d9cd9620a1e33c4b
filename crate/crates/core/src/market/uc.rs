use vof_lp::{solve_lp, solve_milp_with, LinearProgram, LpSolution, LpStatus, MilpError, MilpOptions};

use super::day_ahead::x_col;
use super::{check_day_inputs, MarketError, MarketSpec, DA_BALANCE_SIGN};

#[derive(Debug, Clone, PartialEq)]
pub struct UcResult {
    pub schedule: Vec<Vec<f64>>,
    /// `commitment[τ][i]`; fractional for the relaxation.
    pub commitment: Vec<Vec<f64>>,
    /// `ρ·x + ρ₀·u` summed over the day.
    pub cost: f64,
    /// Generation-only part `ρ·x`.
    pub energy_cost: f64,
    /// Balance duals of the terminal LP (for the MILP: with `u` fixed).
    pub lambda: Vec<f64>,
    pub relaxation_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    /// Search stopped at the node budget; `cost` is the incumbent's.
    pub budget_exhausted: bool,
}

fn u_col(spec: &MarketSpec, tau: usize, i: usize) -> usize {
    spec.num_gens() * spec.horizon + x_col(spec, tau, i)
}

fn uc_lp(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> (LinearProgram, Vec<usize>) {
    let g = spec.num_gens();
    let t = spec.horizon;
    let rho0 = spec.commitment_costs();
    let mut lp = LinearProgram::new(2 * g * t);
    for tau in 0..t {
        for i in 0..g {
            let x = x_col(spec, tau, i);
            let u = u_col(spec, tau, i);
            lp.set_cost(x, spec.gen_costs[i]);
            lp.set_cost(u, rho0[i]);
            lp.set_bounds(u, 0.0, 1.0);
        }
    }
    for tau in 0..t {
        let terms: Vec<(usize, f64)> = (0..g).map(|i| (x_col(spec, tau, i), DA_BALANCE_SIGN)).collect();
        lp.add_eq_terms(&terms, DA_BALANCE_SIGN * (load[tau] - forecast[tau]));
    }
    for tau in 0..t {
        for i in 0..g {
            lp.add_le_terms(&[(x_col(spec, tau, i), 1.0), (u_col(spec, tau, i), -spec.gen_caps[i])], 0.0);
        }
    }
    if let Some(r) = &spec.ramps {
        for tau in 0..t.saturating_sub(1) {
            for i in 0..g {
                let (now, next) = (x_col(spec, tau, i), x_col(spec, tau + 1, i));
                lp.add_le_terms(&[(next, 1.0), (now, -1.0), (u_col(spec, tau + 1, i), -r[i])], 0.0);
            }
        }
        for tau in 0..t.saturating_sub(1) {
            for i in 0..g {
                let (now, next) = (x_col(spec, tau, i), x_col(spec, tau + 1, i));
                lp.add_le_terms(&[(now, 1.0), (next, -1.0), (u_col(spec, tau, i), -r[i])], 0.0);
            }
        }
    }
    let binaries = (0..t).flat_map(|tau| (0..g).map(move |i| (tau, i))).map(|(tau, i)| u_col(spec, tau, i)).collect();
    (lp, binaries)
}

/// Commitment MILP with `x ≤ x̄∘u` and ramp rows gated by `r∘u`. Returns the
/// LP together with the indices of the binary commitment variables.
pub fn build_uc(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> Result<(LinearProgram, Vec<usize>), MarketError> {
    check_day_inputs(spec, forecast, load)?;
    Ok(uc_lp(spec, forecast, load))
}

/// [`build_uc`] with `0 ≤ u ≤ 1` continuous.
pub fn build_relaxed_uc(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> Result<LinearProgram, MarketError> {
    build_uc(spec, forecast, load).map(|(lp, _)| lp)
}

fn to_result(spec: &MarketSpec, sol: &LpSolution) -> UcResult {
    let g = spec.num_gens();
    let gt = g * spec.horizon;
    let energy_cost = sol.x[..gt].iter().enumerate().map(|(j, x)| x * spec.gen_costs[j % g]).sum();
    UcResult {
        schedule: sol.x[..gt].chunks(g).map(<[f64]>::to_vec).collect(),
        commitment: sol.x[gt..].chunks(g).map(<[f64]>::to_vec).collect(),
        cost: sol.objective,
        energy_cost,
        lambda: sol.eq_duals.iter().map(|y| DA_BALANCE_SIGN * y).collect(),
        relaxation_bound: sol.objective,
        gap: 0.0,
        nodes: 1,
        budget_exhausted: false,
    }
}

pub fn solve_relaxed_uc(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> Result<UcResult, MarketError> {
    let lp = build_relaxed_uc(spec, forecast, load)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(MarketError::Infeasible("relaxed commitment violates ramp limits".into()));
    }
    Ok(to_result(spec, &sol))
}

pub fn solve_uc(spec: &MarketSpec, forecast: &[f64], load: &[f64], opts: &MilpOptions) -> Result<UcResult, MarketError> {
    let (lp, binaries) = build_uc(spec, forecast, load)?;
    match solve_milp_with(&lp, &binaries, opts) {
        Ok(m) => {
            let mut res = to_result(spec, &m.incumbent);
            res.relaxation_bound = m.relaxation_bound;
            res.gap = m.gap;
            res.nodes = m.nodes;
            Ok(res)
        }
        Err(MilpError::NodeBudgetExceeded { nodes, best: Some(best) }) => {
            let mut res = to_result(spec, &best.incumbent);
            res.relaxation_bound = best.relaxation_bound;
            res.gap = best.gap;
            res.nodes = nodes;
            res.budget_exhausted = true;
            Ok(res)
        }
        Err(MilpError::NodeBudgetExceeded { nodes, best: None }) => Err(MarketError::NodeBudgetExceeded { nodes }),
        Err(MilpError::Infeasible) => Err(MarketError::Infeasible("no commitment pattern is feasible".into())),
        Err(e) => Err(MarketError::Milp(e)),
    }
}
