use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ForecastError, ForecastModel};
use crate::fsio::write_atomic;

pub const CHECKPOINT_FORMAT: &str = "vof-forecast-model";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON layout; floats are written with round-trip precision so a reloaded
/// model reproduces forecasts bit for bit.
#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: ForecastModel,
}

pub fn save_checkpoint(model: &ForecastModel, path: &Path) -> Result<(), ForecastError> {
    let env = Envelope { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, model: model.clone() };
    let text = serde_json::to_string(&env).map_err(|e| ForecastError::Checkpoint(e.to_string()))?;
    write_atomic(path, text.as_bytes()).map_err(|e| ForecastError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<ForecastModel, ForecastError> {
    let text = std::fs::read_to_string(path).map_err(|e| ForecastError::Checkpoint(format!("{}: {e}", path.display())))?;
    let env: Envelope = serde_json::from_str(&text).map_err(|e| ForecastError::Checkpoint(e.to_string()))?;
    if env.format != CHECKPOINT_FORMAT || env.version != CHECKPOINT_VERSION {
        return Err(ForecastError::Checkpoint(format!("unsupported checkpoint {} v{}", env.format, env.version)));
    }
    let m = env.model;
    let expected = m.architecture.param_count(m.input_dim);
    if m.params.len() != expected {
        return Err(ForecastError::ShapeMismatch { expected, got: m.params.len() });
    }
    if m.scaling.mean.len() != m.input_dim || m.scaling.std.len() != m.input_dim {
        return Err(ForecastError::DimensionMismatch { expected: m.input_dim, got: m.scaling.mean.len() });
    }
    Ok(m)
}
