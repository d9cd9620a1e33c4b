//! Day-ahead / real-time dispatch models as LP instances.
//!
//! Balance rows are oriented so that the returned multipliers read as
//! prices:
//!
//! * day-ahead: `Σ x_τ = l_τ - ỹ_τ`, so `λ_τ = d cost / d l_τ` is the
//!   marginal generation cost and `d cost / d ỹ_τ = -λ_τ`;
//! * real-time: `Σ z⁺ - Σ z⁻ = ỹ - y`, so a shortage (`y < ỹ`) is priced
//!   at the marginal up resource and a surplus at the marginal down
//!   resource, and `d cost / d ỹ = +ν`.

mod day_ahead;
mod decomposition;
mod real_time;
mod stochastic;
mod uc;

pub use day_ahead::{build_day_ahead, solve_day_ahead, DayAheadResult};
pub use decomposition::{dual_decomposition, DualBundle};
pub use real_time::{build_real_time, solve_real_time, RealTimeResult};
pub use stochastic::{build_stochastic, solve_stochastic, StochasticLimits, StochasticResult};
pub use uc::{build_relaxed_uc, build_uc, solve_relaxed_uc, solve_uc, UcResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vof_lp::{LpError, MilpError};

/// Sign applied to the day-ahead balance row `Σ x_τ = sign · (l_τ - ỹ_τ)`.
pub(crate) const DA_BALANCE_SIGN: f64 = 1.0;
/// Sign applied to the real-time balance row `Σ z⁺ - Σ z⁻ = sign · (ỹ - y)`.
pub(crate) const RT_BALANCE_SIGN: f64 = 1.0;

/// Slack allowed when checking forecasts against `[0, ȳ]` and loads.
pub(crate) const INPUT_TOL: f64 = 1e-9;

/// Physical and economic parameters of the single-node system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    /// Marginal costs of the slow-start generators ($/kW).
    pub gen_costs: Vec<f64>,
    /// Generator capacities (kW).
    pub gen_caps: Vec<f64>,
    /// Ramp limits per step (kW); `None` disables the ramp rows.
    #[serde(default)]
    pub ramps: Option<Vec<f64>>,
    /// Per-hour commitment costs used only by the unit-commitment models ($).
    #[serde(default)]
    pub startup_costs: Vec<f64>,
    /// Marginal costs of the up-regulating flexible resources ($/kW).
    pub up_costs: Vec<f64>,
    pub up_caps: Vec<f64>,
    /// Marginal utilities of the down-regulating flexible resources ($/kW).
    pub down_costs: Vec<f64>,
    pub down_caps: Vec<f64>,
    /// Wind capacity ȳ (kW), the upper bound on any forecast.
    pub wind_capacity: f64,
    /// Hours per day T.
    pub horizon: usize,
}

impl MarketSpec {
    /// Two generators (40 kW at 10 $/kW, 60 kW at 30 $/kW), one up resource
    /// (20 kW at 100 $/kW), one down resource (20 kW at 10 $/kW), ȳ = 40 kW,
    /// a single hour and no ramp rows.
    pub fn toy_a() -> Self {
        Self {
            gen_costs: vec![10.0, 30.0],
            gen_caps: vec![40.0, 60.0],
            ramps: None,
            startup_costs: vec![0.0, 0.0],
            up_costs: vec![100.0],
            up_caps: vec![20.0],
            down_costs: vec![10.0],
            down_caps: vec![20.0],
            wind_capacity: 40.0,
            horizon: 1,
        }
    }

    /// Two 50 kW generators with costs 10/5 $/kW and commitment costs
    /// 200/1000 $, one hour.
    pub fn toy_uc() -> Self {
        Self {
            gen_costs: vec![10.0, 5.0],
            gen_caps: vec![50.0, 50.0],
            ramps: None,
            startup_costs: vec![200.0, 1000.0],
            up_costs: vec![100.0],
            up_caps: vec![50.0],
            down_costs: vec![10.0],
            down_caps: vec![50.0],
            wind_capacity: 30.0,
            horizon: 1,
        }
    }

    /// Market used by the synthetic benchmark: the toy generator costs with
    /// a 30 kW base unit, ramp limits, two up resources, one down resource
    /// and a 24 h horizon.
    pub fn synth_default() -> Self {
        Self {
            gen_costs: vec![10.0, 30.0],
            gen_caps: vec![30.0, 70.0],
            ramps: Some(vec![20.0, 30.0]),
            startup_costs: vec![40.0, 120.0],
            up_costs: vec![100.0, 120.0],
            up_caps: vec![20.0, 25.0],
            down_costs: vec![10.0],
            down_caps: vec![45.0],
            wind_capacity: 40.0,
            horizon: 24,
        }
    }

    pub fn num_gens(&self) -> usize {
        self.gen_costs.len()
    }

    pub fn total_gen_cap(&self) -> f64 {
        self.gen_caps.iter().sum()
    }

    pub fn total_up_cap(&self) -> f64 {
        self.up_caps.iter().sum()
    }

    pub fn total_down_cap(&self) -> f64 {
        self.down_caps.iter().sum()
    }

    /// Commitment costs, zero-filled when unset.
    pub fn commitment_costs(&self) -> Vec<f64> {
        let mut c = self.startup_costs.clone();
        c.resize(self.num_gens(), 0.0);
        c
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let g = self.num_gens();
        let bad = |msg: String| Err(MarketError::InvalidSpec(msg));
        if g == 0 {
            return bad("at least one generator is required".into());
        }
        if self.gen_caps.len() != g {
            return bad(format!("{g} generator costs but {} capacities", self.gen_caps.len()));
        }
        if let Some(r) = &self.ramps {
            if r.len() != g {
                return bad(format!("{g} generators but {} ramp limits", r.len()));
            }
        }
        if !self.startup_costs.is_empty() && self.startup_costs.len() != g {
            return bad(format!("{g} generators but {} commitment costs", self.startup_costs.len()));
        }
        if self.up_costs.len() != self.up_caps.len() || self.down_costs.len() != self.down_caps.len() {
            return bad("flexible resource costs and capacities differ in length".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least one step".into());
        }
        let all = self
            .gen_costs
            .iter()
            .chain(&self.gen_caps)
            .chain(self.ramps.iter().flatten())
            .chain(&self.startup_costs)
            .chain(&self.up_costs)
            .chain(&self.up_caps)
            .chain(&self.down_costs)
            .chain(&self.down_caps)
            .chain(std::iter::once(&self.wind_capacity));
        for v in all {
            if !v.is_finite() || *v < 0.0 {
                return bad(format!("parameter {v} must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Replaces the up-resource costs (and optionally the down utilities),
    /// keeping everything else.
    pub fn with_rt_costs(&self, up: Option<&[f64]>, down: Option<&[f64]>) -> Result<Self, MarketError> {
        let mut spec = self.clone();
        if let Some(up) = up {
            if up.len() != spec.up_costs.len() {
                return Err(MarketError::InvalidSpec(format!(
                    "override has {} up costs, market has {}",
                    up.len(),
                    spec.up_costs.len()
                )));
            }
            spec.up_costs = up.to_vec();
        }
        if let Some(down) = down {
            if down.len() != spec.down_costs.len() {
                return Err(MarketError::InvalidSpec(format!(
                    "override has {} down utilities, market has {}",
                    down.len(),
                    spec.down_costs.len()
                )));
            }
            spec.down_costs = down.to_vec();
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MarketError {
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("InfeasibleByConstruction: hour {hour}: {detail}")]
    InfeasibleByConstruction { hour: usize, detail: String },
    #[error("Infeasible: {0}")]
    Infeasible(String),
    #[error("BalancingInfeasible: deviation exceeds flexible capacity by {deficit} kW")]
    BalancingInfeasible { deficit: f64 },
    #[error("IdentityViolation: duals reconstruct {reconstructed} but the primal cost is {primal}")]
    IdentityViolation { reconstructed: f64, primal: f64 },
    #[error("ScaleExceeded: {rows} rows x {cols} columns exceeds the dense solver limit")]
    ScaleExceeded { rows: usize, cols: usize },
    #[error("NodeBudgetExceeded: unit commitment stopped after {nodes} nodes without an incumbent")]
    NodeBudgetExceeded { nodes: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Milp(MilpError),
}

pub(crate) fn check_day_inputs(spec: &MarketSpec, forecast: &[f64], load: &[f64]) -> Result<(), MarketError> {
    spec.validate()?;
    let t = spec.horizon;
    if forecast.len() != t || load.len() != t {
        return Err(MarketError::InvalidInput(format!(
            "expected {t} hourly values, got {} forecasts and {} loads",
            forecast.len(),
            load.len()
        )));
    }
    let cap = spec.total_gen_cap();
    for (tau, (&f, &l)) in forecast.iter().zip(load).enumerate() {
        if !f.is_finite() || f < -INPUT_TOL || f > spec.wind_capacity + INPUT_TOL {
            return Err(MarketError::InvalidInput(format!(
                "forecast {f} at hour {tau} outside [0, {}]",
                spec.wind_capacity
            )));
        }
        if !l.is_finite() || l <= 0.0 {
            return Err(MarketError::InvalidInput(format!("load {l} at hour {tau} must be positive")));
        }
        if f > l + INPUT_TOL {
            return Err(MarketError::InfeasibleByConstruction {
                hour: tau,
                detail: format!("forecast {f} exceeds load {l}"),
            });
        }
        if cap + f < l - INPUT_TOL {
            return Err(MarketError::InfeasibleByConstruction {
                hour: tau,
                detail: format!("generation capacity {cap} plus forecast {f} cannot cover load {l}"),
            });
        }
    }
    Ok(())
}
