use vof_lp::{solve_lp, LinearProgram, LpStatus};

use super::day_ahead::x_col;
use super::{MarketError, MarketSpec, INPUT_TOL};

/// Size guard for the dense extensive form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticLimits {
    pub max_rows: usize,
    /// Upper bound on `rows × columns` of the dense row storage.
    pub max_entries: usize,
}

impl Default for StochasticLimits {
    fn default() -> Self {
        Self { max_rows: 3000, max_entries: 25_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticResult {
    pub schedule: Vec<Vec<f64>>,
    /// First-stage wind schedule ỹ*.
    pub forecast: Vec<f64>,
    /// First-stage cost plus expected recourse cost.
    pub objective: f64,
    pub day_ahead_cost: f64,
    pub expected_rt_cost: f64,
}

struct Layout {
    g: usize,
    t: usize,
    nu: usize,
    nd: usize,
}

impl Layout {
    fn new(spec: &MarketSpec) -> Self {
        Self { g: spec.num_gens(), t: spec.horizon, nu: spec.up_costs.len(), nd: spec.down_costs.len() }
    }
    fn y_col(&self, tau: usize) -> usize {
        self.g * self.t + tau
    }
    fn z_base(&self, s: usize, tau: usize) -> usize {
        self.g * self.t + self.t + (s * self.t + tau) * (self.nu + self.nd)
    }
    fn cols(&self, scenarios: usize) -> usize {
        self.z_base(scenarios, 0)
    }
    fn rows(&self, scenarios: usize, ramps: bool) -> usize {
        self.t + scenarios * self.t + if ramps { 2 * self.t.saturating_sub(1) * self.g } else { 0 }
    }
}

fn check_inputs(
    spec: &MarketSpec,
    load: &[f64],
    scenarios: &[Vec<f64>],
    probs: &[f64],
    limits: &StochasticLimits,
) -> Result<(), MarketError> {
    spec.validate()?;
    let t = spec.horizon;
    if scenarios.is_empty() || scenarios.len() != probs.len() {
        return Err(MarketError::InvalidInput(format!(
            "{} scenarios with {} probabilities",
            scenarios.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(MarketError::InvalidInput("probabilities must be non-negative and sum to one".into()));
    }
    if load.len() != t || scenarios.iter().any(|s| s.len() != t) {
        return Err(MarketError::InvalidInput(format!("loads and scenarios must have {t} hours")));
    }
    if scenarios.iter().flatten().any(|y| !y.is_finite() || *y < -INPUT_TOL) {
        return Err(MarketError::InvalidInput("scenario values must be finite and non-negative".into()));
    }
    let cap = spec.total_gen_cap();
    for (tau, &l) in load.iter().enumerate() {
        if !l.is_finite() || l <= 0.0 {
            return Err(MarketError::InvalidInput(format!("load {l} at hour {tau} must be positive")));
        }
        if cap + spec.wind_capacity.min(l) < l - INPUT_TOL {
            return Err(MarketError::InfeasibleByConstruction {
                hour: tau,
                detail: format!("capacity {cap} plus wind {} cannot cover load {l}", spec.wind_capacity),
            });
        }
    }
    let layout = Layout::new(spec);
    let rows = layout.rows(scenarios.len(), spec.ramps.is_some());
    let cols = layout.cols(scenarios.len());
    if rows > limits.max_rows || rows.saturating_mul(cols) > limits.max_entries {
        return Err(MarketError::ScaleExceeded { rows, cols });
    }
    Ok(())
}

/// Extensive form over `[x, ỹ, (z⁺, z⁻) per scenario and hour]`.
pub fn build_stochastic(
    spec: &MarketSpec,
    load: &[f64],
    scenarios: &[Vec<f64>],
    probs: &[f64],
    limits: &StochasticLimits,
) -> Result<LinearProgram, MarketError> {
    check_inputs(spec, load, scenarios, probs, limits)?;
    let lay = Layout::new(spec);
    let mut lp = LinearProgram::new(lay.cols(scenarios.len()));
    for tau in 0..lay.t {
        for i in 0..lay.g {
            let j = x_col(spec, tau, i);
            lp.set_cost(j, spec.gen_costs[i]);
            lp.set_bounds(j, 0.0, spec.gen_caps[i]);
        }
        lp.set_bounds(lay.y_col(tau), 0.0, spec.wind_capacity);
    }
    for (s, p) in probs.iter().enumerate() {
        for tau in 0..lay.t {
            let base = lay.z_base(s, tau);
            for k in 0..lay.nu {
                lp.set_cost(base + k, p * spec.up_costs[k]);
                lp.set_bounds(base + k, 0.0, spec.up_caps[k]);
            }
            for k in 0..lay.nd {
                lp.set_cost(base + lay.nu + k, -p * spec.down_costs[k]);
                lp.set_bounds(base + lay.nu + k, 0.0, spec.down_caps[k]);
            }
        }
    }
    for tau in 0..lay.t {
        let mut terms: Vec<(usize, f64)> = (0..lay.g).map(|i| (x_col(spec, tau, i), 1.0)).collect();
        terms.push((lay.y_col(tau), 1.0));
        lp.add_eq_terms(&terms, load[tau]);
    }
    for (s, scenario) in scenarios.iter().enumerate() {
        for tau in 0..lay.t {
            let base = lay.z_base(s, tau);
            let mut terms: Vec<(usize, f64)> = (0..lay.nu).map(|k| (base + k, 1.0)).collect();
            terms.extend((0..lay.nd).map(|k| (base + lay.nu + k, -1.0)));
            terms.push((lay.y_col(tau), -1.0));
            lp.add_eq_terms(&terms, -scenario[tau]);
        }
    }
    if let Some(r) = &spec.ramps {
        for sign in [1.0, -1.0] {
            for tau in 0..lay.t.saturating_sub(1) {
                for i in 0..lay.g {
                    lp.add_le_terms(&[(x_col(spec, tau + 1, i), sign), (x_col(spec, tau, i), -sign)], r[i]);
                }
            }
        }
    }
    Ok(lp)
}

pub fn solve_stochastic(
    spec: &MarketSpec,
    load: &[f64],
    scenarios: &[Vec<f64>],
    probs: &[f64],
    limits: &StochasticLimits,
) -> Result<StochasticResult, MarketError> {
    let lp = build_stochastic(spec, load, scenarios, probs, limits)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(MarketError::Infeasible(
                "no first-stage schedule balances every scenario within the flexible capacity".into(),
            ))
        }
        LpStatus::Unbounded => return Err(MarketError::Infeasible("stochastic program is unbounded".into())),
    }
    let lay = Layout::new(spec);
    let gt = lay.g * lay.t;
    let schedule: Vec<Vec<f64>> = sol.x[..gt].chunks(lay.g).map(<[f64]>::to_vec).collect();
    let forecast = sol.x[gt..gt + lay.t].to_vec();
    let day_ahead_cost: f64 = sol.x[..gt].iter().zip(&lp.objective[..gt]).map(|(x, c)| x * c).sum();
    Ok(StochasticResult {
        schedule,
        forecast,
        objective: sol.objective,
        day_ahead_cost,
        expected_rt_cost: sol.objective - day_ahead_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{solve_day_ahead, solve_real_time};

    /// Expected cost of a fixed first-stage wind schedule, by direct
    /// evaluation of the two stages.
    fn two_stage_cost(spec: &MarketSpec, y_da: f64, scen: &[f64], load: f64) -> f64 {
        let da = solve_day_ahead(spec, &[y_da], &[load]).unwrap();
        let rt: f64 = scen.iter().map(|&y| solve_real_time(spec, y_da, y).unwrap().cost).sum::<f64>();
        da.cost + rt / scen.len() as f64
    }

    /// Minimum over the kinks of the piecewise-linear convex cost.
    fn breakpoint_oracle(spec: &MarketSpec, scen: &[f64], load: f64) -> (f64, f64) {
        let mut cands = vec![0.0, spec.wind_capacity, load - spec.gen_caps[0]];
        cands.extend_from_slice(scen);
        for &y in scen {
            cands.push(y + spec.total_up_cap());
            cands.push(y - spec.total_down_cap());
        }
        cands
            .into_iter()
            .filter(|c| (0.0..=spec.wind_capacity).contains(c))
            .filter(|&c| scen.iter().all(|&y| c - y <= spec.total_up_cap() && y - c <= spec.total_down_cap()))
            .map(|c| (c, two_stage_cost(spec, c, scen, load)))
            .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    fn toy_solve(spec: &MarketSpec, scen: &[f64]) -> StochasticResult {
        let scenarios: Vec<Vec<f64>> = scen.iter().map(|&y| vec![y]).collect();
        let probs = vec![1.0 / scen.len() as f64; scen.len()];
        solve_stochastic(spec, &[56.0], &scenarios, &probs, &StochasticLimits::default()).unwrap()
    }

    #[test]
    fn two_scenarios_settle_on_the_low_one() {
        let spec = MarketSpec::toy_a();
        let res = toy_solve(&spec, &[8.0, 12.0]);
        assert!((res.forecast[0] - 8.0).abs() < 1e-9);
        assert!((res.objective - 620.0).abs() < 1e-9);
        let (arg, val) = breakpoint_oracle(&spec, &[8.0, 12.0], 56.0);
        assert_eq!(arg, 8.0);
        assert!((val - 620.0).abs() < 1e-9);
    }

    #[test]
    fn cheap_shortage_pushes_the_schedule_to_the_price_kink() {
        let mut spec = MarketSpec::toy_a();
        spec.up_costs = vec![20.0];
        let res = toy_solve(&spec, &[8.0, 12.0]);
        let (arg, val) = breakpoint_oracle(&spec, &[8.0, 12.0], 56.0);
        // Past 12 the slope is -30 + 20 until gen 2 leaves the margin at 16.
        assert_eq!(arg, 16.0);
        assert!((val - 520.0).abs() < 1e-9);
        assert!((res.forecast[0] - arg).abs() < 1e-9);
        assert!((res.objective - val).abs() < 1e-9);
    }

    #[test]
    fn single_scenario_is_perfect_foresight() {
        let spec = MarketSpec::toy_a();
        let res = toy_solve(&spec, &[10.0]);
        assert!((res.forecast[0] - 10.0).abs() < 1e-9);
        assert!((res.objective - 580.0).abs() < 1e-9);
        assert!(res.expected_rt_cost.abs() < 1e-9);
    }

    #[test]
    fn oversized_instance_is_refused() {
        let spec = MarketSpec::synth_default();
        let scen = vec![vec![10.0; 24]; 200];
        let probs = vec![1.0 / 200.0; 200];
        let err = build_stochastic(&spec, &[56.0; 24], &scen, &probs, &StochasticLimits::default()).unwrap_err();
        assert!(matches!(err, MarketError::ScaleExceeded { .. }));
    }

    #[test]
    fn unbalanceable_scenario_set_is_infeasible() {
        let spec = MarketSpec::toy_a();
        // Scenario 0 needs ỹ ≤ 20, scenario 40 needs ỹ ≥ 30.
        let scenarios = vec![vec![0.0], vec![40.0]];
        let mut tight = spec;
        tight.down_caps = vec![10.0];
        let err = solve_stochastic(&tight, &[56.0], &scenarios, &[0.5, 0.5], &StochasticLimits::default()).unwrap_err();
        assert!(matches!(err, MarketError::Infeasible(_)));
    }
}
