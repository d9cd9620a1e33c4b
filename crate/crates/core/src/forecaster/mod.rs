//! Point-forecast models mapping one hour's features to a bounded wind
//! forecast `ỹ = ȳ · sigmoid(a(s))`.

mod adam;
mod checkpoint;
mod loss;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use loss::{
    mse_loss, mse_loss_grad, nominal_level, pinball_loss, pinball_loss_grad, value_loss, value_loss_grad, LossKind,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;

/// Number of input features per hour: wind speed and direction at two heights.
pub const DEFAULT_INPUT_DIM: usize = 4;

/// Samples per partial sum in batch reductions. Partial sums are added in
/// order, so results do not depend on the execution mode.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ForecastError {
    #[error("DimensionMismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ShapeMismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("InvalidQuantile: {0} is not in (0, 1)")]
    InvalidQuantile(f64),
    #[error("DegeneratePrices: up and down prices are both {0}")]
    DegeneratePrices(f64),
    #[error("OutOfRange: day-ahead price {lambda} outside [{down}, {up}]")]
    OutOfRange { lambda: f64, up: f64, down: f64 },
    #[error("InvalidArchitecture: {0}")]
    InvalidArchitecture(String),
    #[error("CheckpointError: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Linear,
    Mlp { hidden: Vec<usize> },
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::Mlp { hidden: vec![256, 256] }
    }
}

impl Architecture {
    /// Layer widths from input to the scalar output.
    fn widths(&self, input_dim: usize) -> Vec<usize> {
        let mut w = vec![input_dim];
        if let Architecture::Mlp { hidden } = self {
            w.extend(hidden);
        }
        w.push(1);
        w
    }

    pub fn param_count(&self, input_dim: usize) -> usize {
        self.widths(input_dim).windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

/// Per-feature affine standardization applied before the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaling {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.mean).zip(&self.std).map(|((v, m), sd)| (v - m) / sd).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub architecture: Architecture,
    pub input_dim: usize,
    /// Output scale ȳ (kW).
    pub capacity: f64,
    pub scaling: FeatureScaling,
    /// Per layer: weights `out × in` row-major, then biases.
    pub params: Vec<f64>,
}

struct Layer {
    inp: usize,
    out: usize,
    offset: usize,
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

impl ForecastModel {
    /// Weights uniform in `±1/√fan_in`, biases likewise.
    pub fn new(architecture: Architecture, input_dim: usize, capacity: f64, seed: u64) -> Result<Self, ForecastError> {
        let mut model = Self::zeros(architecture, input_dim, capacity)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in model.layers() {
            let bound = 1.0 / (layer.inp as f64).sqrt();
            for p in &mut model.params[layer.offset..layer.offset + layer.out * (layer.inp + 1)] {
                *p = rng.gen_range(-bound..=bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(architecture: Architecture, input_dim: usize, capacity: f64) -> Result<Self, ForecastError> {
        if input_dim == 0 {
            return Err(ForecastError::InvalidArchitecture("input dimension must be positive".into()));
        }
        if let Architecture::Mlp { hidden } = &architecture {
            if hidden.is_empty() || hidden.contains(&0) {
                return Err(ForecastError::InvalidArchitecture(format!("hidden widths {hidden:?}")));
            }
        }
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(ForecastError::InvalidArchitecture(format!("output scale {capacity}")));
        }
        let n = architecture.param_count(input_dim);
        Ok(Self { architecture, input_dim, capacity, scaling: FeatureScaling::identity(input_dim), params: vec![0.0; n] })
    }

    pub fn with_scaling(mut self, scaling: FeatureScaling) -> Result<Self, ForecastError> {
        if scaling.mean.len() != self.input_dim || scaling.std.len() != self.input_dim {
            return Err(ForecastError::DimensionMismatch { expected: self.input_dim, got: scaling.mean.len() });
        }
        self.scaling = scaling;
        Ok(self)
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> Vec<Layer> {
        let mut offset = 0;
        self.architecture
            .widths(self.input_dim)
            .windows(2)
            .map(|p| {
                let layer = Layer { inp: p[0], out: p[1], offset };
                offset += p[0] * p[1] + p[1];
                layer
            })
            .collect()
    }

    fn check_dim(&self, s: &[f64]) -> Result<(), ForecastError> {
        if s.len() != self.input_dim {
            return Err(ForecastError::DimensionMismatch { expected: self.input_dim, got: s.len() });
        }
        Ok(())
    }

    /// Activations of every layer for a standardized input; the last entry
    /// holds the raw scalar output.
    fn activations(&self, z: Vec<f64>) -> Vec<Vec<f64>> {
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(z);
        for (k, layer) in layers.iter().enumerate() {
            let input = &acts[k];
            let w = &self.params[layer.offset..layer.offset + layer.out * layer.inp];
            let b = &self.params[layer.offset + layer.out * layer.inp..layer.offset + layer.out * (layer.inp + 1)];
            let mut out: Vec<f64> = (0..layer.out)
                .map(|o| b[o] + w[o * layer.inp..(o + 1) * layer.inp].iter().zip(input).map(|(a, x)| a * x).sum::<f64>())
                .collect();
            if k != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    /// Forecast in kW for raw (unstandardized) features.
    pub fn forward(&self, s: &[f64]) -> Result<f64, ForecastError> {
        self.check_dim(s)?;
        let acts = self.activations(self.scaling.apply(s));
        Ok(self.capacity * sigmoid(acts[acts.len() - 1][0]))
    }

    /// `upstream · ∂ỹ/∂Θ`.
    pub fn backward(&self, s: &[f64], upstream: f64) -> Result<Vec<f64>, ForecastError> {
        self.check_dim(s)?;
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_grad(s, upstream, &mut grad);
        Ok(grad)
    }

    fn accumulate_grad(&self, s: &[f64], upstream: f64, grad: &mut [f64]) {
        let acts = self.activations(self.scaling.apply(s));
        let layers = self.layers();
        let sig = sigmoid(acts[acts.len() - 1][0]);
        let mut delta = vec![upstream * self.capacity * sig * (1.0 - sig)];
        for k in (0..layers.len()).rev() {
            let layer = &layers[k];
            let input = &acts[k];
            let w_off = layer.offset;
            let b_off = layer.offset + layer.out * layer.inp;
            for o in 0..layer.out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[w_off + o * layer.inp..w_off + (o + 1) * layer.inp];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[b_off + o] += d;
            }
            if k == 0 {
                break;
            }
            let w = &self.params[w_off..b_off];
            let mut prev = vec![0.0; layer.inp];
            for o in 0..layer.out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, a) in prev.iter_mut().zip(&w[o * layer.inp..(o + 1) * layer.inp]) {
                    *p += d * a;
                }
            }
            // ReLU derivative, using the post-activation value.
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    pub fn predict_batch(&self, inputs: &[Vec<f64>], exec: Execution) -> Result<Vec<f64>, ForecastError> {
        exec.try_map(inputs, |s| self.forward(s))
    }

    /// `Σ_i upstream_i · ∂ỹ_i/∂Θ`, summed in fixed-size chunks so the result
    /// is identical under either execution mode.
    pub fn batch_gradient(&self, inputs: &[Vec<f64>], upstream: &[f64], exec: Execution) -> Result<Vec<f64>, ForecastError> {
        if inputs.len() != upstream.len() {
            return Err(ForecastError::ShapeMismatch { expected: inputs.len(), got: upstream.len() });
        }
        if let Some(bad) = inputs.iter().find(|s| s.len() != self.input_dim) {
            return Err(ForecastError::DimensionMismatch { expected: self.input_dim, got: bad.len() });
        }
        let chunks = inputs.len().div_ceil(CHUNK);
        let partials = exec.map_range(chunks, |c| {
            let mut g = vec![0.0; self.params.len()];
            let end = ((c + 1) * CHUNK).min(inputs.len());
            for i in c * CHUNK..end {
                if upstream[i] != 0.0 {
                    self.accumulate_grad(&inputs[i], upstream[i], &mut g);
                }
            }
            g
        });
        let mut total = vec![0.0; self.params.len()];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_half_capacity() {
        let m = ForecastModel::zeros(Architecture::Mlp { hidden: vec![8, 8] }, 4, 40.0).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), 20.0);
    }

    #[test]
    fn saturated_output_never_exceeds_capacity() {
        let mut m = ForecastModel::zeros(Architecture::Linear, 4, 40.0).unwrap();
        m.params[0] = 1e6;
        let y = m.forward(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(y <= 40.0 && y > 39.999);
        m.params[0] = -1e6;
        let y = m.forward(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((0.0..1e-3).contains(&y));
    }

    #[test]
    fn linear_identity_on_first_feature() {
        let mut m = ForecastModel::zeros(Architecture::Linear, 4, 40.0).unwrap();
        m.params[0] = 1.0;
        for (s1, expect) in [(-1.0, 40.0 / (1.0 + 1f64.exp())), (0.0, 20.0), (2.0, 40.0 / (1.0 + (-2f64).exp()))] {
            let y = m.forward(&[s1, 5.0, -3.0, 7.0]).unwrap();
            assert!((y - expect).abs() < 1e-12, "{s1}: {y} vs {expect}");
        }
    }

    #[test]
    fn dimension_is_checked() {
        let m = ForecastModel::zeros(Architecture::Linear, 4, 40.0).unwrap();
        assert_eq!(m.forward(&[1.0]).unwrap_err(), ForecastError::DimensionMismatch { expected: 4, got: 1 });
    }

    #[test]
    fn parameter_count_matches_layout() {
        assert_eq!(Architecture::Linear.param_count(4), 5);
        assert_eq!(Architecture::default().param_count(4), 4 * 256 + 256 + 256 * 256 + 256 + 256 + 1);
        let m = ForecastModel::new(Architecture::Mlp { hidden: vec![8] }, 4, 1.0, 3).unwrap();
        assert_eq!(m.num_params(), 4 * 8 + 8 + 8 + 1);
        assert!(m.params.iter().all(|p| p.abs() <= 0.5 + 1e-12));
    }

    #[test]
    fn scaling_is_applied_before_the_network() {
        let mut m = ForecastModel::zeros(Architecture::Linear, 1, 10.0).unwrap();
        m.params[0] = 1.0;
        let m = m.with_scaling(FeatureScaling { mean: vec![3.0], std: vec![2.0] }).unwrap();
        assert!((m.forward(&[3.0]).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn batch_gradient_is_mode_independent() {
        let m = ForecastModel::new(Architecture::Mlp { hidden: vec![16, 16] }, 4, 40.0, 11).unwrap();
        let inputs: Vec<Vec<f64>> = (0..300).map(|i| (0..4).map(|k| ((i * 7 + k * 3) % 11) as f64 / 5.0 - 1.0).collect()).collect();
        let up: Vec<f64> = (0..300).map(|i| (i % 5) as f64 - 2.0).collect();
        let a = m.batch_gradient(&inputs, &up, Execution::Sequential).unwrap();
        let b = m.batch_gradient(&inputs, &up, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
