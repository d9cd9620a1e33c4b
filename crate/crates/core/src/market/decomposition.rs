use serde::{Deserialize, Serialize};
use vof_lp::TOL;

use super::{DayAheadResult, MarketError, MarketSpec, RealTimeResult};

/// Duals of one day split into the forecast-dependent prices and the
/// forecast-independent remainders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBundle {
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    /// `Σ λ_τ l_τ - Σ δ·x̄ - Σ (η̄ + η̲)·r`.
    pub psi_d: f64,
    /// `-(μ·cap⁺ + ζ·cap⁻)` per hour.
    pub psi_r: Vec<f64>,
    /// Day-ahead plus real-time primal cost the bundle reconstructs.
    pub primal_cost: f64,
}

impl DualBundle {
    /// `Σ -λ_τ ỹ_τ - ν_τ (y_τ - ỹ_τ) + ψᴰ + Σ ψᴿ_τ`.
    pub fn reconstruct(&self, forecast: &[f64], realization: &[f64]) -> f64 {
        let mut total = self.psi_d;
        for tau in 0..self.lambda.len() {
            total += -self.lambda[tau] * forecast[tau] - self.nu[tau] * (realization[tau] - forecast[tau]) + self.psi_r[tau];
        }
        total
    }
}

pub fn dual_decomposition(
    spec: &MarketSpec,
    da: &DayAheadResult,
    rt: &[RealTimeResult],
    forecast: &[f64],
    realization: &[f64],
    load: &[f64],
) -> Result<DualBundle, MarketError> {
    let t = spec.horizon;
    if da.lambda.len() != t || rt.len() != t || forecast.len() != t || realization.len() != t || load.len() != t {
        return Err(MarketError::InvalidInput(format!("decomposition needs {t} hours of every input")));
    }
    let mut psi_d: f64 = da.lambda.iter().zip(load).map(|(l, d)| l * d).sum();
    for hour in &da.cap_duals {
        psi_d -= hour.iter().zip(&spec.gen_caps).map(|(d, c)| d * c).sum::<f64>();
    }
    if let Some(r) = &spec.ramps {
        for (up, down) in da.ramp_up_duals.iter().zip(&da.ramp_down_duals) {
            for i in 0..r.len() {
                psi_d -= (up[i] + down[i]) * r[i];
            }
        }
    }
    let psi_r: Vec<f64> = rt
        .iter()
        .map(|h| {
            let mu: f64 = h.up_duals.iter().zip(&spec.up_caps).map(|(m, c)| m * c).sum();
            let zeta: f64 = h.down_duals.iter().zip(&spec.down_caps).map(|(z, c)| z * c).sum();
            -(mu + zeta)
        })
        .collect();
    let primal_cost = da.cost + rt.iter().map(|h| h.cost).sum::<f64>();
    let bundle = DualBundle {
        lambda: da.lambda.clone(),
        nu: rt.iter().map(|h| h.nu).collect(),
        psi_d,
        psi_r,
        primal_cost,
    };
    let reconstructed = bundle.reconstruct(forecast, realization);
    if (reconstructed - primal_cost).abs() > TOL * (1.0 + primal_cost.abs()) {
        return Err(MarketError::IdentityViolation { reconstructed, primal: primal_cost });
    }
    Ok(bundle)
}
