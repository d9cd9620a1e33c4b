use vof_lp::{solve_lp, LinearProgram, LpStatus};

use super::{MarketError, MarketSpec, INPUT_TOL, RT_BALANCE_SIGN};

#[derive(Debug, Clone, PartialEq)]
pub struct RealTimeResult {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    /// `ρ⁺·z⁺ - ρ⁻·z⁻`; negative when surplus is absorbed at a utility.
    pub cost: f64,
    pub nu: f64,
    /// Upper-bound duals of the up resources (μ) and down resources (ζ).
    pub up_duals: Vec<f64>,
    pub down_duals: Vec<f64>,
    pub basis: Vec<usize>,
}

/// Variables are `[z⁺..., z⁻...]` with a single balance row.
pub fn build_real_time(spec: &MarketSpec, forecast: f64, realization: f64) -> Result<LinearProgram, MarketError> {
    spec.validate()?;
    if !(forecast.is_finite() && realization.is_finite()) || forecast < -INPUT_TOL || realization < -INPUT_TOL {
        return Err(MarketError::InvalidInput(format!(
            "forecast {forecast} and realization {realization} must be finite and non-negative"
        )));
    }
    let deviation = forecast - realization;
    let deficit = if deviation > 0.0 { deviation - spec.total_up_cap() } else { -deviation - spec.total_down_cap() };
    if deficit > INPUT_TOL * (1.0 + deviation.abs()) {
        return Err(MarketError::BalancingInfeasible { deficit });
    }

    let nu = spec.up_costs.len();
    let nd = spec.down_costs.len();
    let mut lp = LinearProgram::new(nu + nd);
    let mut terms = Vec::with_capacity(nu + nd);
    for k in 0..nu {
        lp.set_cost(k, spec.up_costs[k]);
        lp.set_bounds(k, 0.0, spec.up_caps[k]);
        terms.push((k, RT_BALANCE_SIGN));
    }
    for k in 0..nd {
        lp.set_cost(nu + k, -spec.down_costs[k]);
        lp.set_bounds(nu + k, 0.0, spec.down_caps[k]);
        terms.push((nu + k, -RT_BALANCE_SIGN));
    }
    lp.add_eq_terms(&terms, RT_BALANCE_SIGN * deviation);
    Ok(lp)
}

pub fn solve_real_time(spec: &MarketSpec, forecast: f64, realization: f64) -> Result<RealTimeResult, MarketError> {
    let lp = build_real_time(spec, forecast, realization)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        // Capacities were checked above, so this is a clipped-tolerance edge.
        let deficit = (forecast - realization).abs() - spec.total_up_cap().min(spec.total_down_cap());
        return Err(MarketError::BalancingInfeasible { deficit: deficit.max(0.0) });
    }
    let n_up = spec.up_costs.len();
    Ok(RealTimeResult {
        up: sol.x[..n_up].to_vec(),
        down: sol.x[n_up..].to_vec(),
        cost: sol.objective,
        nu: RT_BALANCE_SIGN * sol.eq_duals[0],
        up_duals: sol.upper_duals[..n_up].to_vec(),
        down_duals: sol.upper_duals[n_up..].to_vec(),
        basis: sol.basis,
    })
}
