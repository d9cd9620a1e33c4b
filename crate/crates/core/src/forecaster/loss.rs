use serde::{Deserialize, Serialize};

use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossKind {
    /// Decision-value loss built from the dispatch duals.
    Value,
    Mse,
    Pinball { quantile: f64 },
}

impl LossKind {
    pub fn validate(&self) -> Result<(), ForecastError> {
        match *self {
            LossKind::Pinball { quantile } if !(quantile > 0.0 && quantile < 1.0) => Err(ForecastError::InvalidQuantile(quantile)),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Value => "value",
            LossKind::Mse => "mse",
            LossKind::Pinball { .. } => "pinball",
        }
    }
}

/// `-λ ỹ - ν (y - ỹ)`: the forecast-dependent part of the day's dual
/// objective with the duals held fixed.
pub fn value_loss(forecast: f64, realization: f64, lambda: f64, nu: f64) -> f64 {
    -lambda * forecast - nu * (realization - forecast)
}

/// Derivative of [`value_loss`] in ỹ.
pub fn value_loss_grad(lambda: f64, nu: f64) -> f64 {
    nu - lambda
}

pub fn mse_loss(forecast: f64, realization: f64) -> f64 {
    let e = forecast - realization;
    e * e
}

pub fn mse_loss_grad(forecast: f64, realization: f64) -> f64 {
    2.0 * (forecast - realization)
}

fn check_quantile(q: f64) -> Result<(), ForecastError> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(ForecastError::InvalidQuantile(q))
    }
}

pub fn pinball_loss(forecast: f64, realization: f64, quantile: f64) -> Result<f64, ForecastError> {
    check_quantile(quantile)?;
    let e = realization - forecast;
    Ok(if e >= 0.0 { quantile * e } else { (quantile - 1.0) * e })
}

/// Subgradient in the forecast; at `forecast == realization` the left limit
/// `-quantile` is used.
pub fn pinball_loss_grad(forecast: f64, realization: f64, quantile: f64) -> Result<f64, ForecastError> {
    check_quantile(quantile)?;
    Ok(if forecast <= realization { -quantile } else { 1.0 - quantile })
}

/// Critical fractile `(λ - ν⁻) / (ν⁺ - ν⁻)`.
pub fn nominal_level(lambda: f64, up: f64, down: f64) -> Result<f64, ForecastError> {
    if up == down {
        return Err(ForecastError::DegeneratePrices(up));
    }
    if !(down..=up).contains(&lambda) {
        return Err(ForecastError::OutOfRange { lambda, up, down });
    }
    Ok((lambda - down) / (up - down))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_loss_examples() {
        assert_eq!(value_loss(10.0, 8.0, 30.0, 100.0), -100.0);
        assert_eq!(value_loss_grad(30.0, 100.0), 70.0);
        assert_eq!(value_loss(10.0, 13.0, 30.0, 10.0), -330.0);
        assert_eq!(value_loss_grad(30.0, 10.0), -20.0);
        // Equal prices make the loss independent of the forecast.
        assert_eq!(value_loss(3.0, 8.0, 25.0, 25.0), -200.0);
        assert_eq!(value_loss(17.0, 8.0, 25.0, 25.0), -200.0);
        assert_eq!(value_loss_grad(25.0, 25.0), 0.0);
    }

    #[test]
    fn pinball_examples() {
        let q = 2.0 / 9.0;
        assert!((pinball_loss(10.0, 19.0, q).unwrap() - 2.0).abs() < 1e-12);
        assert!((pinball_loss(10.0, 1.0, q).unwrap() - 7.0).abs() < 1e-12);
        assert_eq!(pinball_loss(5.0, 5.0, q).unwrap(), 0.0);
        assert_eq!(mse_loss(5.0, 5.0), 0.0);
        assert_eq!(pinball_loss_grad(5.0, 5.0, q).unwrap(), -q);
        assert_eq!(pinball_loss_grad(6.0, 5.0, q).unwrap(), 1.0 - q);
        assert_eq!(pinball_loss(1.0, 2.0, 1.0), Err(ForecastError::InvalidQuantile(1.0)));
        assert!(pinball_loss_grad(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn nominal_level_examples() {
        assert_eq!(nominal_level(30.0, 100.0, 10.0).unwrap(), 2.0 / 9.0);
        assert_eq!(nominal_level(10.0, 100.0, 10.0).unwrap(), 0.0);
        assert_eq!(nominal_level(100.0, 100.0, 10.0).unwrap(), 1.0);
        assert_eq!(nominal_level(30.0, 50.0, 50.0), Err(ForecastError::DegeneratePrices(50.0)));
        assert!(matches!(nominal_level(5.0, 100.0, 10.0), Err(ForecastError::OutOfRange { .. })));
    }
}
