//! Experiment configuration and the end-to-end commands behind the CLI.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vof_lp::MilpOptions;

use crate::data::{load_csv, split, synth_generate, write_csv, DataError, SampleSet, SynthConfig};
use crate::evaluation::{
    capacity_sweep, cost_reduction_by_dual_gap, evaluate_perfect, evaluate_sto_opt, evaluate_uc, evaluate_with_override,
    model_forecasts, qua_q_level, simulate_operation, EvaluationError, EvaluationReport, GapBin, StoOptSettings,
    SweepCell,
};
use crate::forecaster::{load_checkpoint, Architecture, ForecastError, ForecastModel, LossKind};
use crate::fsio::write_atomic;
use crate::market::{MarketError, MarketSpec};
use crate::training::{train_quality_in, train_value_oriented_in, LowerLevel, TrainingConfig, TrainingError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("IoError: {0}")]
    Io(String),
}

impl ExperimentError {
    /// Error class: the leading word of the message.
    pub fn class(&self) -> String {
        let msg = self.to_string();
        msg.split(':').next().unwrap_or("Error").trim().to_string()
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Data(_) => 3,
            ExperimentError::Training(TrainingError::CapacityAuditFailed { .. }) => 5,
            ExperimentError::Training(TrainingError::InvalidConfig(_)) => 2,
            ExperimentError::Training(_) => 4,
            ExperimentError::Evaluation(EvaluationError::BalancingInfeasible { .. }) => 7,
            ExperimentError::Evaluation(_) => 6,
            ExperimentError::Market(_) => 8,
            ExperimentError::Forecast(_) => 9,
            ExperimentError::Io(_) => 10,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    Proposed,
    QuaE,
    QuaQ,
    PerF,
    StoOpt,
    /// The proposed scheme with a linear model.
    LinearAblation,
}

impl Approach {
    pub const ALL: [Approach; 6] =
        [Approach::Proposed, Approach::QuaE, Approach::QuaQ, Approach::PerF, Approach::StoOpt, Approach::LinearAblation];

    pub fn name(self) -> &'static str {
        match self {
            Approach::Proposed => "proposed",
            Approach::QuaE => "qua-e",
            Approach::QuaQ => "qua-q",
            Approach::PerF => "per-f",
            Approach::StoOpt => "sto-opt",
            Approach::LinearAblation => "linear-ablation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// CSV file to load; the synthetic generator is used when absent.
    pub path: Option<PathBuf>,
    pub seed: u64,
    pub days: usize,
    /// Wind capacity ȳ of the raw data (kW).
    pub capacity: f64,
    pub wind_multiplier: f64,
    pub train_frac: f64,
    pub synth: SynthConfig,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            seed: 1,
            days: 200,
            capacity: 40.0,
            wind_multiplier: 1.0,
            train_frac: 0.8,
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub approaches: Vec<Approach>,
    pub scenarios: usize,
    pub knn: usize,
    pub capacities: Vec<f64>,
    /// Real-time prices used at evaluation only.
    pub rt_up_override: Option<Vec<f64>>,
    pub rt_down_override: Option<Vec<f64>>,
    pub milp_node_budget: usize,
    pub dual_gap_bins: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            approaches: Approach::ALL.to_vec(),
            scenarios: 50,
            knn: 50,
            capacities: vec![20.0, 30.0, 40.0],
            rt_up_override: None,
            rt_down_override: None,
            milp_node_budget: MilpOptions::default().node_budget,
            dual_gap_bins: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "MarketSpec::synth_default")]
    pub market: MarketSpec,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            market: MarketSpec::synth_default(),
            data: DataSection::default(),
            training: TrainingConfig::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string().replace('\n', " ")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ExperimentError> {
        toml::to_string(self).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.market.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.training.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        let d = &self.data;
        if let Some(p) = &d.path {
            if !p.exists() {
                return bad(format!("data file {} does not exist", p.display()));
            }
        } else if d.days == 0 {
            return bad("data.days must be positive".into());
        }
        if !(d.capacity.is_finite() && d.capacity > 0.0) {
            return bad(format!("data.capacity {} must be positive", d.capacity));
        }
        if !(d.wind_multiplier.is_finite() && d.wind_multiplier >= 0.0) {
            return bad(format!("data.wind_multiplier {} must be non-negative", d.wind_multiplier));
        }
        if (d.capacity * d.wind_multiplier - self.market.wind_capacity).abs() > 1e-9 * (1.0 + self.market.wind_capacity) {
            return bad(format!(
                "market.wind_capacity {} differs from data.capacity × data.wind_multiplier = {}",
                self.market.wind_capacity,
                d.capacity * d.wind_multiplier
            ));
        }
        let e = &self.evaluation;
        if e.scenarios == 0 || e.knn == 0 || e.dual_gap_bins == 0 {
            return bad("evaluation.scenarios, knn and dual_gap_bins must be positive".into());
        }
        if e.capacities.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad(format!("evaluation.capacities {:?}", e.capacities));
        }
        Ok(())
    }

    fn sto_settings(&self) -> StoOptSettings {
        StoOptSettings {
            k: self.evaluation.knn,
            scenarios: self.evaluation.scenarios,
            seed: self.training.seed,
            ..StoOptSettings::default()
        }
    }
}

/// The full dataset described by the data section, with the wind
/// multiplier applied.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<SampleSet, ExperimentError> {
    let d = &cfg.data;
    let mut synth = d.synth.clone();
    synth.capacity = d.capacity;
    let set = match &d.path {
        Some(p) => load_csv(p, d.capacity)?,
        None => synth_generate(d.seed, d.days, &synth),
    };
    Ok(if d.wind_multiplier == 1.0 { set } else { crate::data::scale_wind(&set, d.wind_multiplier) })
}

pub fn load_split(cfg: &ExperimentConfig) -> Result<(SampleSet, SampleSet), ExperimentError> {
    let set = load_dataset(cfg)?;
    Ok(split(&set, cfg.data.train_frac, cfg.market.horizon)?)
}

/// Trains the model behind `approach`; `None` for the optimization-based
/// baselines.
pub fn train_approach(
    approach: Approach,
    train: &SampleSet,
    spec: &MarketSpec,
    training: &TrainingConfig,
    run_dir: Option<&Path>,
) -> Result<Option<ForecastModel>, ExperimentError> {
    let model = match approach {
        Approach::Proposed => {
            let cfg = TrainingConfig { loss: LossKind::Value, ..training.clone() };
            train_value_oriented_in(train, spec, &cfg, run_dir)?.0
        }
        Approach::LinearAblation => {
            let cfg = TrainingConfig { loss: LossKind::Value, architecture: Architecture::Linear, ..training.clone() };
            train_value_oriented_in(train, spec, &cfg, run_dir)?.0
        }
        Approach::QuaE => {
            let cfg = TrainingConfig { loss: LossKind::Mse, ..training.clone() };
            train_quality_in(train, spec.horizon, &cfg, run_dir)?.0
        }
        Approach::QuaQ => {
            let quantile = qua_q_level(spec, train)?;
            let cfg = TrainingConfig { loss: LossKind::Pinball { quantile }, ..training.clone() };
            train_quality_in(train, spec.horizon, &cfg, run_dir)?.0
        }
        Approach::PerF | Approach::StoOpt => return Ok(None),
    };
    Ok(Some(model))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproachResult {
    pub approach: Approach,
    pub report: EvaluationReport,
    pub train_seconds: f64,
}

/// Trains (where needed) and evaluates one approach on the test set.
pub fn run_approach(
    approach: Approach,
    train: &SampleSet,
    test: &SampleSet,
    spec: &MarketSpec,
    cfg: &ExperimentConfig,
    run_dir: Option<&Path>,
) -> Result<ApproachResult, ExperimentError> {
    let exec = cfg.training.execution;
    let t0 = Instant::now();
    let model = train_approach(approach, train, spec, &cfg.training, run_dir)?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let report = match (approach, model) {
        (Approach::PerF, _) => evaluate_perfect(test, spec, exec)?,
        (Approach::StoOpt, _) => evaluate_sto_opt(test, train, spec, &cfg.sto_settings(), exec)?,
        (_, Some(m)) => {
            let t1 = Instant::now();
            let f = model_forecasts(&m, test, exec)?;
            let mut r = simulate_operation(&f, test, spec, exec)?;
            r.seconds = t1.elapsed().as_secs_f64();
            r
        }
        (_, None) => unreachable!("learned approaches always return a model"),
    };
    Ok(ApproachResult { approach, report, train_seconds })
}

/// Aggregates of one report, without timings so reruns compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg_cost: f64,
    pub avg_da_cost: f64,
    pub avg_rt_cost: f64,
    pub rmse: f64,
    pub hours: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uc_days_budget_exhausted: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uc_max_gap: Option<f64>,
}

impl From<&EvaluationReport> for Metrics {
    fn from(r: &EvaluationReport) -> Self {
        Self {
            avg_cost: r.avg_cost,
            avg_da_cost: r.avg_da_cost,
            avg_rt_cost: r.avg_rt_cost,
            rmse: r.rmse,
            hours: r.hours.len(),
            uc_days_budget_exhausted: r.uc.as_ref().map(|u| u.days_budget_exhausted),
            uc_max_gap: r.uc.as_ref().map(|u| u.max_gap),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(|e| io_err(path, e))
}

fn make_dir(dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn snapshot_config(cfg: &ExperimentConfig, dir: &Path) -> Result<(), ExperimentError> {
    let p = dir.join("experiment.toml");
    write_atomic(&p, cfg.to_toml_string()?.as_bytes()).map_err(|e| io_err(&p, e))
}

pub fn cmd_gen_data(cfg: &ExperimentConfig, out_path: &Path) -> Result<SampleSet, ExperimentError> {
    cfg.validate()?;
    let set = load_dataset(cfg)?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        make_dir(parent)?;
    }
    write_csv(&set, out_path)?;
    Ok(set)
}

/// Trains the model selected by `training.loss` and fills `out_dir` with
/// the run directory (config snapshots, trace, checkpoints, final model).
pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf, ExperimentError> {
    cfg.validate()?;
    let (train, _) = load_split(cfg)?;
    make_dir(out_dir)?;
    snapshot_config(cfg, out_dir)?;
    match cfg.training.loss {
        LossKind::Value => {
            train_value_oriented_in(&train, &cfg.market, &cfg.training, Some(out_dir))?;
        }
        _ => {
            train_quality_in(&train, cfg.market.horizon, &cfg.training, Some(out_dir))?;
        }
    }
    Ok(out_dir.join("model.json"))
}

/// Evaluates a saved model on the test split, under the real-time price
/// override when one is configured.
pub fn cmd_eval(cfg: &ExperimentConfig, model_path: &Path, out_dir: &Path) -> Result<EvaluationReport, ExperimentError> {
    cfg.validate()?;
    let (_, test) = load_split(cfg)?;
    let model = load_checkpoint(model_path)?;
    let exec = cfg.training.execution;
    let f = model_forecasts(&model, &test, exec)?;
    let e = &cfg.evaluation;
    let report = if e.rt_up_override.is_some() || e.rt_down_override.is_some() {
        evaluate_with_override(&f, &test, &cfg.market, e.rt_up_override.as_deref(), e.rt_down_override.as_deref(), exec)?
    } else {
        simulate_operation(&f, &test, &cfg.market, exec)?
    };
    make_dir(out_dir)?;
    write_json(&out_dir.join("metrics.json"), &Metrics::from(&report))?;
    report.write_hourly_csv(&out_dir.join("hourly.csv"))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareMetrics {
    pub approaches: BTreeMap<String, Metrics>,
    /// Mean hourly cost reduction of the proposed approach over Qua-E,
    /// binned by the proposed `λ - ν`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_gap_vs_qua_e: Option<Vec<GapBin>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_seconds: f64,
    pub eval_seconds: f64,
}

pub struct CompareOutcome {
    pub results: Vec<ApproachResult>,
    pub metrics: CompareMetrics,
}

/// Every configured approach on one shared split. Writes `metrics.json`,
/// `comparison.csv`, `timings.json` and `hourly_<approach>.csv`.
pub fn cmd_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CompareOutcome, ExperimentError> {
    cfg.validate()?;
    let (train, test) = load_split(cfg)?;
    make_dir(out_dir)?;
    snapshot_config(cfg, out_dir)?;
    let mut results = Vec::new();
    for &a in &cfg.evaluation.approaches {
        let run_dir = out_dir.join(format!("run_{}", a.name()));
        let learned = !matches!(a, Approach::PerF | Approach::StoOpt);
        results.push(run_approach(a, &train, &test, &cfg.market, cfg, learned.then_some(run_dir.as_path()))?);
    }
    let find = |a: Approach| results.iter().find(|r| r.approach == a);
    let dual_gap = match (find(Approach::Proposed), find(Approach::QuaE)) {
        (Some(p), Some(q)) => Some(cost_reduction_by_dual_gap(&p.report, &q.report, cfg.evaluation.dual_gap_bins)?),
        _ => None,
    };
    let metrics = CompareMetrics {
        approaches: results.iter().map(|r| (r.approach.name().to_string(), Metrics::from(&r.report))).collect(),
        dual_gap_vs_qua_e: dual_gap,
    };
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    let timings: BTreeMap<String, Timing> = results
        .iter()
        .map(|r| (r.approach.name().to_string(), Timing { train_seconds: r.train_seconds, eval_seconds: r.report.seconds }))
        .collect();
    write_json(&out_dir.join("timings.json"), &timings)?;
    let mut table = String::from("approach,avg_cost,avg_da_cost,avg_rt_cost,rmse\n");
    for r in &results {
        let m = Metrics::from(&r.report);
        table.push_str(&format!("{},{},{},{},{}\n", r.approach.name(), m.avg_cost, m.avg_da_cost, m.avg_rt_cost, m.rmse));
        r.report.write_hourly_csv(&out_dir.join(format!("hourly_{}.csv", r.approach.name())))?;
    }
    let p = out_dir.join("comparison.csv");
    write_atomic(&p, table.as_bytes()).map_err(|e| io_err(&p, e))?;
    Ok(CompareOutcome { results, metrics })
}

/// Every configured approach at every configured capacity; writes
/// `sweep.csv` and `metrics.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<SweepCell>, ExperimentError> {
    cfg.validate()?;
    let (train, test) = load_split(cfg)?;
    make_dir(out_dir)?;
    snapshot_config(cfg, out_dir)?;
    let cells = capacity_sweep(&train, &test, &cfg.market, &cfg.evaluation.capacities, |tr, te, sp| {
        cfg.evaluation
            .approaches
            .iter()
            .map(|&a| run_approach(a, tr, te, sp, cfg, None).map(|r| (a.name().to_string(), r.report)))
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    let mut table = String::from("approach,capacity,avg_cost,rmse\n");
    for c in &cells {
        table.push_str(&format!("{},{},{},{}\n", c.approach, c.capacity, c.avg_cost, c.rmse));
    }
    let p = out_dir.join("sweep.csv");
    write_atomic(&p, table.as_bytes()).map_err(|e| io_err(&p, e))?;
    write_json(&out_dir.join("metrics.json"), &cells)?;
    Ok(cells)
}

/// Unit-commitment day-ahead stage: value forecasts trained against the
/// relaxed commitment model versus MSE forecasts. Writes `metrics.json`
/// and `hourly_<approach>.csv`.
pub fn cmd_uc(cfg: &ExperimentConfig, out_dir: &Path) -> Result<BTreeMap<String, EvaluationReport>, ExperimentError> {
    cfg.validate()?;
    let (train, test) = load_split(cfg)?;
    make_dir(out_dir)?;
    snapshot_config(cfg, out_dir)?;
    let exec = cfg.training.execution;
    let opts = MilpOptions { node_budget: cfg.evaluation.milp_node_budget, ..MilpOptions::default() };
    let relaxed = TrainingConfig { lower_level: LowerLevel::RelaxedUc, ..cfg.training.clone() };
    let mut out = BTreeMap::new();
    for (a, training) in [(Approach::Proposed, &relaxed), (Approach::QuaE, &cfg.training)] {
        let model = train_approach(a, &train, &cfg.market, training, None)?.expect("learned approach");
        let f = model_forecasts(&model, &test, exec)?;
        let report = evaluate_uc(&f, &test, &cfg.market, &opts, exec)?;
        report.write_hourly_csv(&out_dir.join(format!("hourly_{}.csv", a.name())))?;
        out.insert(a.name().to_string(), report);
    }
    let metrics: BTreeMap<String, Metrics> = out.iter().map(|(k, r)| (k.clone(), Metrics::from(r))).collect();
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    Ok(out)
}
