//! Training loops: the value-oriented scheme that alternates between
//! forecasting, solving the dispatch LPs for their duals and a gradient
//! step with the duals frozen, and plain supervised training under MSE or
//! pinball loss.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{fit_scaling, DataError, Record, SampleSet};
use crate::exec::Execution;
use crate::forecaster::{
    adam_step, mse_loss, mse_loss_grad, pinball_loss, pinball_loss_grad, save_checkpoint, value_loss, value_loss_grad,
    AdamState, Architecture, ForecastError, ForecastModel, LossKind, DEFAULT_INPUT_DIM,
};
use crate::fsio::write_atomic;
use crate::market::{solve_day_ahead, solve_real_time, solve_relaxed_uc, MarketError, MarketSpec};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TrainingError {
    #[error("ConfigError: {0}")]
    InvalidConfig(String),
    #[error("CapacityAuditFailed: {count} samples exceed flexible capacity (first: sample {first})")]
    CapacityAuditFailed { count: usize, first: usize },
    #[error("EmptyDataset: nothing to train on")]
    EmptyDataset,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("IoError: {0}")]
    Io(String),
}

/// Day-ahead model used as the lower level while training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerLevel {
    #[default]
    Dispatch,
    /// Linear relaxation of unit commitment.
    RelaxedUc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// Days per batch.
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub loss: LossKind,
    pub architecture: Architecture,
    pub lower_level: LowerLevel,
    /// Stop once the mean epoch loss moved less than `min_delta` over the
    /// last `patience` epochs; `patience = 0` disables early stopping.
    pub patience: usize,
    pub min_delta: f64,
    /// Write a checkpoint every N epochs into the run directory (0: never).
    pub checkpoint_every: usize,
    /// Print a progress line to stderr every N epochs (0: silent).
    pub log_every: usize,
    pub execution: Execution,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 8,
            steps_per_epoch: 1,
            learning_rate: 1e-3,
            seed: 0,
            loss: LossKind::Value,
            architecture: Architecture::default(),
            lower_level: LowerLevel::Dispatch,
            patience: 20,
            min_delta: 1e-6,
            checkpoint_every: 0,
            log_every: 0,
            execution: Execution::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: String| Err(TrainingError::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.steps_per_epoch == 0 {
            return bad("steps per epoch must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(self.min_delta >= 0.0) {
            return bad(format!("min_delta {} must be non-negative", self.min_delta));
        }
        self.loss.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Mean day-ahead and real-time prices over the epoch's batches; zero
    /// for quality losses.
    pub mean_lambda: f64,
    pub mean_nu: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
    pub stopped_early: bool,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,mean_lambda,mean_nu,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{},{}\n", e.epoch, e.mean_loss, e.mean_lambda, e.mean_nu, e.seconds));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub sample: usize,
    pub realization: f64,
    /// The worst-case forecast, 0 or ȳ.
    pub forecast: f64,
    /// Flexible capacity missing to balance `y - ỹ` (kW).
    pub deficit: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityAudit {
    pub violations: Vec<AuditViolation>,
}

impl CapacityAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every realization can be balanced whatever forecast in
/// `[0, ȳ]` is issued: `ȳ - y` against the up capacity and `y` against the
/// down capacity.
pub fn capacity_audit(data: &SampleSet, spec: &MarketSpec) -> CapacityAudit {
    let up = spec.total_up_cap();
    let down = spec.total_down_cap();
    let cap = spec.wind_capacity;
    let tol = 1e-9 * (1.0 + cap);
    let mut violations = Vec::new();
    for (i, r) in data.records.iter().enumerate() {
        let shortage = cap - r.wind - up;
        let surplus = r.wind - down;
        if shortage > tol {
            violations.push(AuditViolation { sample: i, realization: r.wind, forecast: cap, deficit: shortage });
        } else if surplus > tol {
            violations.push(AuditViolation { sample: i, realization: r.wind, forecast: 0.0, deficit: surplus });
        }
    }
    CapacityAudit { violations }
}

/// Batch loss and `∂loss/∂Θ` of the value loss with the duals held fixed;
/// the loss is averaged over all hours of the batch.
pub fn frozen_dual_gradient(
    model: &ForecastModel,
    inputs: &[Vec<f64>],
    realizations: &[f64],
    lambda: &[f64],
    nu: &[f64],
    exec: Execution,
) -> Result<(f64, Vec<f64>), ForecastError> {
    let n = inputs.len();
    for len in [realizations.len(), lambda.len(), nu.len()] {
        if len != n {
            return Err(ForecastError::ShapeMismatch { expected: n, got: len });
        }
    }
    let forecasts = model.predict_batch(inputs, exec)?;
    let scale = 1.0 / n.max(1) as f64;
    let loss = (0..n).map(|i| value_loss(forecasts[i], realizations[i], lambda[i], nu[i])).sum::<f64>() * scale;
    let upstream: Vec<f64> = (0..n).map(|i| value_loss_grad(lambda[i], nu[i]) * scale).collect();
    let grad = model.batch_gradient(inputs, &upstream, exec)?;
    Ok((loss, grad))
}

/// Day-ahead prices for one day's forecasts under the chosen lower level.
pub fn day_ahead_prices(
    spec: &MarketSpec,
    lower: LowerLevel,
    forecast: &[f64],
    load: &[f64],
) -> Result<Vec<f64>, MarketError> {
    Ok(match lower {
        LowerLevel::Dispatch => solve_day_ahead(spec, forecast, load)?.lambda,
        LowerLevel::RelaxedUc => solve_relaxed_uc(spec, forecast, load)?.lambda,
    })
}

struct Batch {
    inputs: Vec<Vec<f64>>,
    winds: Vec<f64>,
    loads: Vec<f64>,
}

fn gather(days: &[&[Record]], pick: &[usize]) -> Batch {
    let mut b = Batch { inputs: Vec::new(), winds: Vec::new(), loads: Vec::new() };
    for &d in pick {
        for r in days[d] {
            b.inputs.push(r.features.to_vec());
            b.winds.push(r.wind);
            b.loads.push(r.load);
        }
    }
    b
}

/// Batch draws: all days in order when the batch covers the set, otherwise
/// a fresh random subset per step.
fn pick_days(num_days: usize, batch: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if batch >= num_days {
        return (0..num_days).collect();
    }
    let mut idx: Vec<usize> = (0..num_days).collect();
    let (chosen, _) = idx.partial_shuffle(rng, batch);
    chosen.to_vec()
}

fn initial_model(config: &TrainingConfig, data: &SampleSet, capacity: f64) -> Result<ForecastModel, TrainingError> {
    let scaling = match &data.scaling {
        Some(s) => s.clone(),
        None => fit_scaling(&data.records),
    };
    Ok(ForecastModel::new(config.architecture.clone(), DEFAULT_INPUT_DIM, capacity, config.seed)?.with_scaling(scaling)?)
}

struct StepStats {
    loss: f64,
    lambda: f64,
    nu: f64,
}

/// Shared optimization loop; `step` returns the batch statistics and the
/// gradient for the current parameters.
fn run_loop<F>(
    mut model: ForecastModel,
    data: &SampleSet,
    horizon: usize,
    config: &TrainingConfig,
    run_dir: Option<&Path>,
    mut step: F,
) -> Result<(ForecastModel, TrainingTrace), TrainingError>
where
    F: FnMut(&ForecastModel, &Batch) -> Result<(StepStats, Vec<f64>), TrainingError>,
{
    config.validate()?;
    if data.is_empty() {
        return Err(TrainingError::EmptyDataset);
    }
    let days = data.days(horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut adam = AdamState::new(model.num_params(), config.learning_rate);
    let mut trace = TrainingTrace::default();
    if let Some(dir) = run_dir {
        std::fs::create_dir_all(dir).map_err(|e| TrainingError::Io(format!("{}: {e}", dir.display())))?;
    }

    for epoch in 1..=config.epochs {
        let t0 = Instant::now();
        let (mut loss, mut lambda, mut nu) = (0.0, 0.0, 0.0);
        for _ in 0..config.steps_per_epoch {
            let batch = gather(&days, &pick_days(days.len(), config.batch_size, &mut rng));
            let (stats, grad) = step(&model, &batch)?;
            adam_step(&mut model.params, &grad, &mut adam)?;
            loss += stats.loss;
            lambda += stats.lambda;
            nu += stats.nu;
        }
        let k = config.steps_per_epoch as f64;
        trace.epochs.push(EpochRecord {
            epoch,
            mean_loss: loss / k,
            mean_lambda: lambda / k,
            mean_nu: nu / k,
            seconds: t0.elapsed().as_secs_f64(),
        });
        if config.log_every > 0 && epoch % config.log_every == 0 {
            eprintln!("epoch {epoch}: loss {:.6}", loss / k);
        }
        if let Some(dir) = run_dir {
            if config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 {
                save_checkpoint(&model, &dir.join(format!("checkpoint_{epoch:05}.json")))?;
            }
        }
        let p = config.patience;
        if p > 0 && trace.epochs.len() > p {
            let n = trace.epochs.len();
            if (trace.epochs[n - 1].mean_loss - trace.epochs[n - 1 - p].mean_loss).abs() < config.min_delta {
                trace.stopped_early = true;
                break;
            }
        }
    }

    if let Some(dir) = run_dir {
        write_run_dir(dir, config, &trace, &model)?;
    }
    Ok((model, trace))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> TrainingError {
    TrainingError::Io(format!("{}: {e}", path.display()))
}

/// Writes `config.toml`, `trace.csv` and `model.json` into `dir`.
pub fn write_run_dir(
    dir: &Path,
    config: &TrainingConfig,
    trace: &TrainingTrace,
    model: &ForecastModel,
) -> Result<PathBuf, TrainingError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let cfg = toml::to_string(config).map_err(|e| TrainingError::Io(e.to_string()))?;
    let p = dir.join("config.toml");
    write_atomic(&p, cfg.as_bytes()).map_err(|e| io_err(&p, e))?;
    let p = dir.join("trace.csv");
    write_atomic(&p, trace.to_csv().as_bytes()).map_err(|e| io_err(&p, e))?;
    let p = dir.join("model.json");
    save_checkpoint(model, &p)?;
    Ok(p)
}

/// Value-oriented training against the dispatch duals of `spec`.
pub fn train_value_oriented(
    data: &SampleSet,
    spec: &MarketSpec,
    config: &TrainingConfig,
) -> Result<(ForecastModel, TrainingTrace), TrainingError> {
    train_value_oriented_in(data, spec, config, None)
}

/// [`train_value_oriented`] that also fills a run directory.
pub fn train_value_oriented_in(
    data: &SampleSet,
    spec: &MarketSpec,
    config: &TrainingConfig,
    run_dir: Option<&Path>,
) -> Result<(ForecastModel, TrainingTrace), TrainingError> {
    spec.validate()?;
    if config.loss != LossKind::Value {
        return Err(TrainingError::InvalidConfig(format!("value-oriented training with {} loss", config.loss.name())));
    }
    let audit = capacity_audit(data, spec);
    if let Some(first) = audit.violations.first() {
        return Err(TrainingError::CapacityAuditFailed { count: audit.violations.len(), first: first.sample });
    }
    let t = spec.horizon;
    let exec = config.execution;
    let lower = config.lower_level;
    let model = initial_model(config, data, spec.wind_capacity)?;
    run_loop(model, data, t, config, run_dir, |model, batch| {
        let forecasts = model.predict_batch(&batch.inputs, exec)?;
        let num_days = forecasts.len() / t;
        let lambda: Vec<f64> = exec
            .try_map_range(num_days, |d| {
                let r = d * t..(d + 1) * t;
                day_ahead_prices(spec, lower, &forecasts[r.clone()], &batch.loads[r])
            })?
            .concat();
        let nu: Vec<f64> = exec.try_map_range(forecasts.len(), |i| {
            solve_real_time(spec, forecasts[i], batch.winds[i]).map(|r| r.nu)
        })?;
        let (loss, grad) = frozen_dual_gradient(model, &batch.inputs, &batch.winds, &lambda, &nu, exec)?;
        let n = lambda.len() as f64;
        let stats = StepStats { loss, lambda: lambda.iter().sum::<f64>() / n, nu: nu.iter().sum::<f64>() / n };
        Ok((stats, grad))
    })
}

/// Supervised training under MSE or pinball loss; batches are groups of
/// `horizon` consecutive samples.
pub fn train_quality(
    data: &SampleSet,
    horizon: usize,
    config: &TrainingConfig,
) -> Result<(ForecastModel, TrainingTrace), TrainingError> {
    train_quality_in(data, horizon, config, None)
}

pub fn train_quality_in(
    data: &SampleSet,
    horizon: usize,
    config: &TrainingConfig,
    run_dir: Option<&Path>,
) -> Result<(ForecastModel, TrainingTrace), TrainingError> {
    let loss_kind = config.loss;
    if loss_kind == LossKind::Value {
        return Err(TrainingError::InvalidConfig("quality training needs an mse or pinball loss".into()));
    }
    let exec = config.execution;
    let model = initial_model(config, data, data.capacity)?;
    run_loop(model, data, horizon, config, run_dir, |model, batch| {
        let forecasts = model.predict_batch(&batch.inputs, exec)?;
        let n = forecasts.len();
        let scale = 1.0 / n as f64;
        let mut loss = 0.0;
        let mut upstream = Vec::with_capacity(n);
        for (&f, &y) in forecasts.iter().zip(&batch.winds) {
            let (l, g) = match loss_kind {
                LossKind::Mse => (mse_loss(f, y), mse_loss_grad(f, y)),
                LossKind::Pinball { quantile } => (pinball_loss(f, y, quantile)?, pinball_loss_grad(f, y, quantile)?),
                LossKind::Value => unreachable!("rejected above"),
            };
            loss += l * scale;
            upstream.push(g * scale);
        }
        let grad = model.batch_gradient(&batch.inputs, &upstream, exec)?;
        Ok((StepStats { loss, lambda: 0.0, nu: 0.0 }, grad))
    })
}
