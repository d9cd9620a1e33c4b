//! Operational simulation of issued forecasts: day-ahead scheduling per
//! day, real-time settlement per hour, and the aggregate metrics.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vof_lp::MilpOptions;

use crate::data::{knn_scenarios, scale_wind, DataError, SampleSet};
use crate::exec::Execution;
use crate::forecaster::{nominal_level, ForecastError, ForecastModel};
use crate::fsio::write_atomic;
use crate::market::{
    solve_day_ahead, solve_real_time, solve_stochastic, solve_uc, MarketError, MarketSpec, StochasticLimits,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvaluationError {
    #[error("EmptyDataset: nothing to evaluate")]
    EmptyDataset,
    #[error("BalancingInfeasible: day {day}, hour {hour}: deviation exceeds flexible capacity by {deficit} kW")]
    BalancingInfeasible { day: usize, hour: usize, deficit: f64 },
    #[error("GridMismatch: {0}")]
    GridMismatch(String),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("{source} (day {day})")]
    Day { day: usize, source: MarketError },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("IoError: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub day: usize,
    pub hour: usize,
    pub realization: f64,
    pub forecast: f64,
    pub lambda: f64,
    pub nu: f64,
    pub da_cost: f64,
    pub rt_cost: f64,
}

impl HourRecord {
    pub fn cost(&self) -> f64 {
        self.da_cost + self.rt_cost
    }
}

/// Branch-and-bound statistics of a unit-commitment evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UcSummary {
    pub days_budget_exhausted: usize,
    pub max_gap: f64,
    pub total_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Root-mean-square forecast error (kW).
    pub rmse: f64,
    /// Mean total, day-ahead and real-time cost per hour ($/h).
    pub avg_cost: f64,
    pub avg_da_cost: f64,
    pub avg_rt_cost: f64,
    pub hours: Vec<HourRecord>,
    /// Wall-clock of the evaluation, including any per-day optimization.
    pub seconds: f64,
    pub uc: Option<UcSummary>,
}

impl EvaluationReport {
    fn from_hours(hours: Vec<HourRecord>, seconds: f64) -> Self {
        let n = hours.len().max(1) as f64;
        let err2: f64 = hours.iter().map(|h| (h.forecast - h.realization).powi(2)).sum();
        let da: f64 = hours.iter().map(|h| h.da_cost).sum();
        let rt: f64 = hours.iter().map(|h| h.rt_cost).sum();
        Self {
            rmse: (err2 / n).sqrt(),
            avg_cost: (da + rt) / n,
            avg_da_cost: da / n,
            avg_rt_cost: rt / n,
            hours,
            seconds,
            uc: None,
        }
    }

    pub fn forecasts(&self) -> Vec<f64> {
        self.hours.iter().map(|h| h.forecast).collect()
    }

    /// `day,hour,y,y_hat,lambda,nu,da_cost,rt_cost` rows.
    pub fn hourly_csv(&self) -> String {
        let mut out = String::from("day,hour,y,y_hat,lambda,nu,da_cost,rt_cost\n");
        for h in &self.hours {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                h.day, h.hour, h.realization, h.forecast, h.lambda, h.nu, h.da_cost, h.rt_cost
            ));
        }
        out
    }

    pub fn write_hourly_csv(&self, path: &Path) -> Result<(), EvaluationError> {
        write_atomic(path, self.hourly_csv().as_bytes()).map_err(|e| EvaluationError::Io(format!("{}: {e}", path.display())))
    }
}

fn check_test_set(test: &SampleSet, spec: &MarketSpec, forecasts: Option<&[f64]>) -> Result<usize, EvaluationError> {
    if test.is_empty() {
        return Err(EvaluationError::EmptyDataset);
    }
    if let Some(f) = forecasts {
        if f.len() != test.len() {
            return Err(EvaluationError::InvalidInput(format!("{} forecasts for {} hours", f.len(), test.len())));
        }
    }
    Ok(test.num_days(spec.horizon)?)
}

/// Forecasts of `model` for every test hour.
pub fn model_forecasts(model: &ForecastModel, test: &SampleSet, exec: Execution) -> Result<Vec<f64>, EvaluationError> {
    Ok(model.predict_batch(&test.raw_features(), exec)?)
}

fn hour_cost(costs: &[f64], dispatch: &[f64]) -> f64 {
    costs.iter().zip(dispatch).map(|(c, x)| c * x).sum()
}

/// Settles one day in real time given its day-ahead outcome.
fn settle_day(
    spec: &MarketSpec,
    day: usize,
    records: &[crate::data::Record],
    forecast: &[f64],
    lambda: &[f64],
    da_costs: &[f64],
) -> Result<Vec<HourRecord>, EvaluationError> {
    let mut out = Vec::with_capacity(records.len());
    for (tau, r) in records.iter().enumerate() {
        let rt = solve_real_time(spec, forecast[tau], r.wind).map_err(|e| match e {
            MarketError::BalancingInfeasible { deficit } => EvaluationError::BalancingInfeasible { day, hour: tau, deficit },
            other => EvaluationError::Day { day, source: other },
        })?;
        out.push(HourRecord {
            day,
            hour: tau,
            realization: r.wind,
            forecast: forecast[tau],
            lambda: lambda[tau],
            nu: rt.nu,
            da_cost: da_costs[tau],
            rt_cost: rt.cost,
        });
    }
    Ok(out)
}

/// Day-ahead dispatch with the issued forecasts, then real-time balancing
/// of every hour's deviation.
pub fn simulate_operation(
    forecasts: &[f64],
    test: &SampleSet,
    spec: &MarketSpec,
    exec: Execution,
) -> Result<EvaluationReport, EvaluationError> {
    let t0 = Instant::now();
    let num_days = check_test_set(test, spec, Some(forecasts))?;
    let t = spec.horizon;
    let days = test.days(t)?;
    let per_day = exec.try_map_range(num_days, |d| {
        let f = &forecasts[d * t..(d + 1) * t];
        let load: Vec<f64> = days[d].iter().map(|r| r.load).collect();
        let da = solve_day_ahead(spec, f, &load).map_err(|e| EvaluationError::Day { day: d, source: e })?;
        let da_costs: Vec<f64> = da.schedule.iter().map(|x| hour_cost(&spec.gen_costs, x)).collect();
        settle_day(spec, d, days[d], f, &da.lambda, &da_costs)
    })?;
    Ok(EvaluationReport::from_hours(per_day.concat(), t0.elapsed().as_secs_f64()))
}

/// Perfect foresight: the realizations themselves are issued.
pub fn evaluate_perfect(test: &SampleSet, spec: &MarketSpec, exec: Execution) -> Result<EvaluationReport, EvaluationError> {
    simulate_operation(&test.winds(), test, spec, exec)
}

/// Settings of the stochastic-programming baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoOptSettings {
    /// Neighbours searched per hour.
    pub k: usize,
    /// Scenarios per day.
    pub scenarios: usize,
    pub seed: u64,
    pub max_rows: usize,
    pub max_entries: usize,
}

impl Default for StoOptSettings {
    fn default() -> Self {
        let lim = StochasticLimits::default();
        Self { k: 50, scenarios: 50, seed: 0, max_rows: lim.max_rows, max_entries: lim.max_entries }
    }
}

/// Per test day: kNN scenarios for every hour, the two-stage stochastic
/// program, and real-time settlement of the realized deviation from the
/// kept first-stage schedule.
pub fn evaluate_sto_opt(
    test: &SampleSet,
    train: &SampleSet,
    spec: &MarketSpec,
    settings: &StoOptSettings,
    exec: Execution,
) -> Result<EvaluationReport, EvaluationError> {
    let t0 = Instant::now();
    let num_days = check_test_set(test, spec, None)?;
    if settings.k == 0 || settings.scenarios == 0 {
        return Err(EvaluationError::InvalidInput("k and the scenario count must be at least 1".into()));
    }
    let t = spec.horizon;
    let days = test.days(t)?;
    let train_std = train.standardized_features();
    let limits = StochasticLimits { max_rows: settings.max_rows, max_entries: settings.max_entries };
    let s = settings.scenarios;
    let probs = vec![1.0 / s as f64; s];
    let per_day = exec.try_map_range(num_days, |d| {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.wrapping_add(d as u64));
        let mut scenarios = vec![vec![0.0; t]; s];
        for (tau, r) in days[d].iter().enumerate() {
            let draws = knn_scenarios(train, &train_std, &r.features, settings.k, s, &mut rng)?;
            for (sc, y) in scenarios.iter_mut().zip(draws) {
                sc[tau] = y;
            }
        }
        let load: Vec<f64> = days[d].iter().map(|r| r.load).collect();
        let sto = solve_stochastic(spec, &load, &scenarios, &probs, &limits)
            .map_err(|e| EvaluationError::Day { day: d, source: e })?;
        let forecast: Vec<f64> = sto.forecast.iter().map(|f| f.clamp(0.0, spec.wind_capacity)).collect();
        let da_costs: Vec<f64> = sto.schedule.iter().map(|x| hour_cost(&spec.gen_costs, x)).collect();
        let lambda = solve_day_ahead(spec, &forecast, &load).map_err(|e| EvaluationError::Day { day: d, source: e })?.lambda;
        settle_day(spec, d, days[d], &forecast, &lambda, &da_costs)
    })?;
    Ok(EvaluationReport::from_hours(per_day.concat(), t0.elapsed().as_secs_f64()))
}

/// Day-ahead stage by unit commitment with binary start decisions; a day
/// whose search hits the node budget keeps its incumbent.
pub fn evaluate_uc(
    forecasts: &[f64],
    test: &SampleSet,
    spec: &MarketSpec,
    opts: &MilpOptions,
    exec: Execution,
) -> Result<EvaluationReport, EvaluationError> {
    let t0 = Instant::now();
    let num_days = check_test_set(test, spec, Some(forecasts))?;
    let t = spec.horizon;
    let days = test.days(t)?;
    let ucc = spec.commitment_costs();
    let per_day = exec.try_map_range(num_days, |d| {
        let f = &forecasts[d * t..(d + 1) * t];
        let load: Vec<f64> = days[d].iter().map(|r| r.load).collect();
        let uc = solve_uc(spec, f, &load, opts).map_err(|e| EvaluationError::Day { day: d, source: e })?;
        let da_costs: Vec<f64> = (0..t)
            .map(|tau| hour_cost(&spec.gen_costs, &uc.schedule[tau]) + hour_cost(&ucc, &uc.commitment[tau]))
            .collect();
        let hours = settle_day(spec, d, days[d], f, &uc.lambda, &da_costs)?;
        Ok::<_, EvaluationError>((hours, uc.budget_exhausted, uc.gap, uc.nodes))
    })?;
    let mut summary = UcSummary::default();
    let mut hours = Vec::with_capacity(test.len());
    for (h, exhausted, gap, nodes) in per_day {
        hours.extend(h);
        summary.days_budget_exhausted += exhausted as usize;
        summary.max_gap = summary.max_gap.max(gap);
        summary.total_nodes += nodes;
    }
    let mut report = EvaluationReport::from_hours(hours, t0.elapsed().as_secs_f64());
    report.uc = Some(summary);
    Ok(report)
}

/// Operation under different real-time prices; `None` keeps a side.
pub fn evaluate_with_override(
    forecasts: &[f64],
    test: &SampleSet,
    spec: &MarketSpec,
    up: Option<&[f64]>,
    down: Option<&[f64]>,
    exec: Execution,
) -> Result<EvaluationReport, EvaluationError> {
    let spec = spec.with_rt_costs(up, down)?;
    simulate_operation(forecasts, test, &spec, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub approach: String,
    pub capacity: f64,
    pub avg_cost: f64,
    pub rmse: f64,
}

/// Rescales the wind column of both sets to each capacity (relative to the
/// training set's capacity), sets ȳ accordingly and runs `recipe`, which
/// trains and evaluates every approach on the rescaled data.
pub fn capacity_sweep<F, E>(
    train: &SampleSet,
    test: &SampleSet,
    spec: &MarketSpec,
    capacities: &[f64],
    mut recipe: F,
) -> Result<Vec<SweepCell>, E>
where
    F: FnMut(&SampleSet, &SampleSet, &MarketSpec) -> Result<Vec<(String, EvaluationReport)>, E>,
    E: From<EvaluationError>,
{
    if !(train.capacity > 0.0) {
        return Err(EvaluationError::InvalidInput(format!("cannot rescale from capacity {}", train.capacity)).into());
    }
    let mut cells = Vec::new();
    for &c in capacities {
        if !(c.is_finite() && c >= 0.0) {
            return Err(EvaluationError::InvalidInput(format!("capacity {c}")).into());
        }
        let m = c / train.capacity;
        let (tr, te) = (scale_wind(train, m), scale_wind(test, m));
        let mut sp = spec.clone();
        sp.wind_capacity = c;
        for (approach, report) in recipe(&tr, &te, &sp)? {
            cells.push(SweepCell { approach, capacity: c, avg_cost: report.avg_cost, rmse: report.rmse });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBin {
    /// Range of `λ - ν` covered by the bin.
    pub lower: f64,
    pub upper: f64,
    pub hours: usize,
    /// Mean of baseline cost minus proposed cost over the bin's hours.
    pub mean_reduction: f64,
}

/// Hours ranked by `λ - ν` under the proposed forecasts and cut into
/// `bins` groups of (nearly) equal count.
pub fn cost_reduction_by_dual_gap(
    proposed: &EvaluationReport,
    baseline: &EvaluationReport,
    bins: usize,
) -> Result<Vec<GapBin>, EvaluationError> {
    if proposed.hours.len() != baseline.hours.len()
        || proposed.hours.iter().zip(&baseline.hours).any(|(a, b)| (a.day, a.hour) != (b.day, b.hour))
    {
        return Err(EvaluationError::GridMismatch(format!(
            "reports cover {} and {} hours on different grids",
            proposed.hours.len(),
            baseline.hours.len()
        )));
    }
    if bins == 0 {
        return Err(EvaluationError::InvalidInput("at least one bin is needed".into()));
    }
    let n = proposed.hours.len();
    let gap = |i: usize| proposed.hours[i].lambda - proposed.hours[i].nu;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| gap(a).total_cmp(&gap(b)).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(bins);
    for b in 0..bins {
        let members = &order[b * n / bins..(b + 1) * n / bins];
        let sum: f64 = members.iter().map(|&i| baseline.hours[i].cost() - proposed.hours[i].cost()).sum();
        out.push(GapBin {
            lower: members.first().map_or(f64::NAN, |&i| gap(i)),
            upper: members.last().map_or(f64::NAN, |&i| gap(i)),
            hours: members.len(),
            mean_reduction: if members.is_empty() { 0.0 } else { sum / members.len() as f64 },
        });
    }
    Ok(out)
}

/// Critical fractile for the pinball baseline: the day-ahead price of the
/// median-load hour (with the mean training realization as forecast)
/// against the cheapest up resource and the best-paid down resource.
pub fn qua_q_level(spec: &MarketSpec, train: &SampleSet) -> Result<f64, EvaluationError> {
    if train.is_empty() {
        return Err(EvaluationError::EmptyDataset);
    }
    let mut loads = train.loads();
    loads.sort_by(f64::total_cmp);
    let median = loads[(loads.len() - 1) / 2];
    let mean_wind = (train.winds().iter().sum::<f64>() / train.len() as f64).clamp(0.0, spec.wind_capacity);
    let mut hour = spec.clone();
    hour.horizon = 1;
    hour.ramps = None;
    let lambda = solve_day_ahead(&hour, &[mean_wind.min(median)], &[median])?.lambda[0];
    let up = spec.up_costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let down = spec.down_costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(nominal_level(lambda, up, down)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;
    use chrono::NaiveDateTime;

    fn set(winds: &[f64], loads: &[f64], capacity: f64) -> SampleSet {
        let start = NaiveDateTime::parse_from_str("2012-01-01T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap();
        let records = winds
            .iter()
            .zip(loads)
            .enumerate()
            .map(|(i, (&w, &l))| Record {
                timestamp: start + chrono::Duration::hours(i as i64),
                features: [i as f64, 0.0, 0.0, 0.0],
                wind: w,
                load: l,
            })
            .collect();
        SampleSet::new(records, capacity).unwrap()
    }

    #[test]
    fn constant_forecast_on_toy_a() {
        let test = set(&[8.0], &[56.0], 40.0);
        let r = simulate_operation(&[10.0], &test, &MarketSpec::toy_a(), Execution::Sequential).unwrap();
        assert!((r.avg_cost - 780.0).abs() < 1e-9);
        assert!((r.avg_da_cost - 580.0).abs() < 1e-9);
        assert!((r.avg_rt_cost - 200.0).abs() < 1e-9);
        assert!((r.rmse - 2.0).abs() < 1e-12);
        assert_eq!(r.hours.len(), 1);
        assert!((r.hours[0].lambda - 30.0).abs() < 1e-9 && (r.hours[0].nu - 100.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_forecasts_need_no_balancing() {
        let test = crate::data::synth_generate(4, 3, &crate::data::SynthConfig::default());
        let r = evaluate_perfect(&test, &MarketSpec::synth_default(), Execution::Parallel).unwrap();
        assert_eq!(r.hours.len(), 72);
        assert!(r.rmse == 0.0);
        assert!(r.hours.iter().all(|h| h.rt_cost.abs() < 1e-9));
        assert!((r.avg_cost - r.avg_da_cost - r.avg_rt_cost).abs() < 1e-9);
    }

    #[test]
    fn empty_test_set_is_rejected() {
        let empty = SampleSet::new(Vec::new(), 40.0).unwrap();
        let err = simulate_operation(&[], &empty, &MarketSpec::toy_a(), Execution::Sequential).unwrap_err();
        assert_eq!(err, EvaluationError::EmptyDataset);
    }

    #[test]
    fn unbalanceable_hour_is_located() {
        let test = set(&[0.0, 0.0], &[56.0, 56.0], 40.0);
        let err = simulate_operation(&[10.0, 30.0], &test, &MarketSpec::toy_a(), Execution::Sequential).unwrap_err();
        assert!(matches!(err, EvaluationError::BalancingInfeasible { day: 1, hour: 0, .. }), "{err:?}");
    }

    fn two_point_fixture(y: f64) -> (SampleSet, SampleSet) {
        // Identical features, so every training hour is a neighbour.
        let mut train = set(&[8.0, 12.0], &[56.0, 56.0], 40.0);
        for r in &mut train.records {
            r.features = [0.0; 4];
        }
        let mut test = set(&[y], &[56.0], 40.0);
        test.records[0].features = [0.0; 4];
        (train, test)
    }

    #[test]
    fn sto_opt_on_toy_a() {
        let spec = MarketSpec::toy_a();
        let settings = StoOptSettings { k: 2, scenarios: 400, ..StoOptSettings::default() };
        for (y, total, rt) in [(8.0, 640.0, 0.0), (12.0, 600.0, -40.0)] {
            let (train, test) = two_point_fixture(y);
            let r = evaluate_sto_opt(&test, &train, &spec, &settings, Execution::Sequential).unwrap();
            assert!((r.hours[0].forecast - 8.0).abs() < 1e-9, "{:?}", r.hours[0]);
            assert!((r.avg_da_cost - 640.0).abs() < 1e-9);
            assert!((r.avg_rt_cost - rt).abs() < 1e-9);
            assert!((r.avg_cost - total).abs() < 1e-9);
        }
    }

    #[test]
    fn single_true_scenario_matches_perfect_foresight() {
        let spec = MarketSpec::toy_a();
        let (train, test) = two_point_fixture(12.0);
        let mut train = train;
        train.records.clear();
        train.records.push(test.records[0].clone());
        let settings = StoOptSettings { k: 1, scenarios: 1, ..StoOptSettings::default() };
        let sto = evaluate_sto_opt(&test, &train, &spec, &settings, Execution::Sequential).unwrap();
        let per = evaluate_perfect(&test, &spec, Execution::Sequential).unwrap();
        assert!((sto.avg_cost - per.avg_cost).abs() < 1e-9);
    }

    fn fixture_report(gaps: &[f64], costs: &[f64]) -> EvaluationReport {
        let hours = gaps
            .iter()
            .zip(costs)
            .enumerate()
            .map(|(i, (&g, &c))| HourRecord {
                day: i / 4,
                hour: i % 4,
                realization: 0.0,
                forecast: 0.0,
                lambda: 30.0,
                nu: 30.0 - g,
                da_cost: c,
                rt_cost: 0.0,
            })
            .collect();
        EvaluationReport::from_hours(hours, 0.0)
    }

    #[test]
    fn dual_gap_bins_match_hand_arithmetic() {
        let gaps = [-70.0, 20.0, -70.0, 20.0, 0.0, -90.0, 20.0, 5.0];
        let proposed = fixture_report(&gaps, &[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]);
        let baseline = fixture_report(&gaps, &[15.0, 20.0, 30.0, 44.0, 50.0, 70.0, 71.0, 80.0]);
        // Ranked gaps: -90 (h5), -70 (h0), -70 (h2), 0 (h4), 5 (h7), 20 (h1), 20 (h3), 20 (h6).
        let bins = cost_reduction_by_dual_gap(&proposed, &baseline, 4).unwrap();
        let means: Vec<f64> = bins.iter().map(|b| b.mean_reduction).collect();
        assert_eq!(means, vec![7.5, 0.0, 0.0, 2.5]);
        assert_eq!((bins[0].lower, bins[0].upper), (-90.0, -70.0));
        let one = cost_reduction_by_dual_gap(&proposed, &baseline, 1).unwrap();
        assert!((one[0].mean_reduction - 20.0 / 8.0).abs() < 1e-12);
        let same = cost_reduction_by_dual_gap(&proposed, &proposed, 4).unwrap();
        assert!(same.iter().all(|b| b.mean_reduction == 0.0));
        let short = fixture_report(&gaps[..4], &[0.0; 4]);
        assert!(matches!(cost_reduction_by_dual_gap(&proposed, &short, 4), Err(EvaluationError::GridMismatch(_))));
    }

    #[test]
    fn uc_evaluation_on_toy_uc() {
        let test = set(&[0.0], &[30.0], 30.0);
        let r = evaluate_uc(&[0.0], &test, &MarketSpec::toy_uc(), &MilpOptions::default(), Execution::Sequential).unwrap();
        assert!((r.avg_da_cost - 500.0).abs() < 1e-9, "{}", r.avg_da_cost);
        assert_eq!(r.uc.as_ref().unwrap().days_budget_exhausted, 0);
    }

    #[test]
    fn free_commitment_matches_plain_dispatch() {
        let mut spec = MarketSpec::synth_default();
        spec.startup_costs = vec![0.0, 0.0];
        let test = crate::data::synth_generate(9, 1, &crate::data::SynthConfig::default());
        let f: Vec<f64> = test.winds().iter().map(|y| (y + 3.0).min(40.0)).collect();
        let uc = evaluate_uc(&f, &test, &spec, &MilpOptions::default(), Execution::Sequential).unwrap();
        let lp = simulate_operation(&f, &test, &spec, Execution::Sequential).unwrap();
        assert!((uc.avg_cost - lp.avg_cost).abs() < 1e-6 * (1.0 + lp.avg_cost.abs()));
    }

    #[test]
    fn override_to_the_same_prices_is_a_no_op() {
        let spec = MarketSpec::synth_default();
        let test = crate::data::synth_generate(1, 2, &crate::data::SynthConfig::default());
        let f = vec![20.0; test.len()];
        let base = simulate_operation(&f, &test, &spec, Execution::Sequential).unwrap();
        let same = evaluate_with_override(&f, &test, &spec, Some(&spec.up_costs), None, Execution::Sequential).unwrap();
        assert_eq!(base.hours, same.hours);
        let high = evaluate_with_override(&f, &test, &spec, Some(&[90.0, 100.0]), None, Execution::Sequential).unwrap();
        let low = evaluate_with_override(&f, &test, &spec, Some(&[5.0, 15.0]), None, Execution::Sequential).unwrap();
        // Below the down utility the up resources are also bought against it,
        // so only the high setting leaves surplus hours untouched.
        for ((h, l), b) in high.hours.iter().zip(&low.hours).zip(&base.hours) {
            if b.realization < b.forecast {
                assert!(h.rt_cost > l.rt_cost);
                assert!(h.rt_cost < b.rt_cost);
            } else {
                assert!((h.rt_cost - b.rt_cost).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sweep_rescales_wind_and_capacity() {
        let set = crate::data::synth_generate(6, 4, &crate::data::SynthConfig::default());
        let (train, test) = crate::data::split(&set, 0.5, 24).unwrap();
        let spec = MarketSpec::synth_default();
        let recipe = |_: &SampleSet, te: &SampleSet, sp: &MarketSpec| -> Result<_, EvaluationError> {
            let per = evaluate_perfect(te, sp, Execution::Sequential)?;
            let flat = simulate_operation(&vec![sp.wind_capacity / 2.0; te.len()], te, sp, Execution::Sequential)?;
            Ok(vec![("per-f".to_string(), per), ("flat".to_string(), flat)])
        };
        let cells = capacity_sweep(&train, &test, &spec, &[0.0, 20.0, 30.0, 40.0], recipe).unwrap();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].avg_cost, cells[1].avg_cost);
        let per: Vec<f64> = cells.iter().filter(|c| c.approach == "per-f").map(|c| c.avg_cost).collect();
        assert!(per.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{per:?}");
        let one = capacity_sweep(&train, &test, &spec, &[40.0], recipe).unwrap();
        assert_eq!(one.len(), 2);
    }

    #[test]
    fn median_hour_level_on_the_synthetic_market() {
        let train = crate::data::synth_generate(3, 20, &crate::data::SynthConfig::default());
        let q = qua_q_level(&MarketSpec::synth_default(), &train).unwrap();
        assert!((q - 2.0 / 9.0).abs() < 1e-12, "{q}");
    }
}
