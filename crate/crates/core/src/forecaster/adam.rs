use serde::{Deserialize, Serialize};

use super::ForecastError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self { m: vec![0.0; num_params], v: vec![0.0; num_params], step: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState) -> Result<(), ForecastError> {
    let n = params.len();
    for len in [grad.len(), state.m.len(), state.v.len()] {
        if len != n {
            return Err(ForecastError::ShapeMismatch { expected: n, got: len });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..n {
        let g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![0.3, -1.2, 4.0];
        let before = p.clone();
        let mut st = AdamState::new(3, 1e-3);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0; 3], &mut st).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.step, 5);
    }

    #[test]
    fn first_step_moves_by_the_learning_rate() {
        let mut p = vec![0.0; 4];
        let g = [3.0, -0.02, 1e4, -7.5];
        let mut st = AdamState::new(4, 1e-3);
        adam_step(&mut p, &g, &mut st).unwrap();
        for (dp, gi) in p.iter().zip(g) {
            assert_eq!(dp.signum(), -gi.signum());
            assert!(dp.abs() <= 1e-3 && dp.abs() >= 1e-3 * (1.0 - 1e-5), "{dp}");
        }
    }

    #[test]
    fn shapes_are_checked() {
        let mut p = vec![0.0; 2];
        let mut st = AdamState::new(3, 1e-3);
        assert!(matches!(adam_step(&mut p, &[0.0; 2], &mut st), Err(ForecastError::ShapeMismatch { .. })));
    }
}
