//! Hourly samples `(features, wind, load)`, CSV I/O, splitting and scenario
//! sampling.

mod csvio;
mod knn;
mod synth;

pub use csvio::{load_csv, write_csv, CSV_HEADER};
pub use knn::{knn_scenarios, nearest_neighbors};
pub use synth::{synth_generate, SynthConfig};

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::forecaster::FeatureScaling;

pub const NUM_FEATURES: usize = 4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DataError {
    #[error("ParseError: line {line}, column {column}: {message}")]
    ParseError { line: usize, column: String, message: String },
    #[error("SchemaMismatch: {0}")]
    SchemaMismatch(String),
    #[error("TimestampOrder: line {line}: timestamp does not increase")]
    TimestampOrder { line: usize },
    #[error("InvalidRecord: line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("TooSmall: {0}")]
    TooSmall(String),
    #[error("IncompleteDay: {0}")]
    IncompleteDay(String),
    #[error("EmptyTrainSet: no training samples to draw scenarios from")]
    EmptyTrainSet,
    #[error("EmptyDataset: no samples")]
    EmptyDataset,
    #[error("IoError: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub timestamp: NaiveDateTime,
    /// `[ws10, wd10, ws100, wd100]`.
    pub features: [f64; NUM_FEATURES],
    /// Wind realization y (kW).
    pub wind: f64,
    /// Load l (kW).
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub records: Vec<Record>,
    /// Wind capacity ȳ the realizations are bounded by (kW).
    pub capacity: f64,
    /// Product of all multipliers applied by [`scale_wind`].
    pub wind_multiplier: f64,
    /// Standardization fitted on the training part, if split.
    pub scaling: Option<FeatureScaling>,
}

/// One day: the records of `horizon` consecutive hours.
pub type Day<'a> = &'a [Record];

impl SampleSet {
    pub fn new(records: Vec<Record>, capacity: f64) -> Result<Self, DataError> {
        let set = Self { records, capacity, wind_multiplier: 1.0, scaling: None };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks every record invariant; line numbers count the header as 1.
    pub fn validate(&self) -> Result<(), DataError> {
        let one_hour = chrono::Duration::hours(1);
        for (k, r) in self.records.iter().enumerate() {
            let line = k + 2;
            let bad = |message: String| Err(DataError::InvalidRecord { line, message });
            if r.features.iter().any(|f| !f.is_finite()) {
                return bad("non-finite feature".into());
            }
            if !r.wind.is_finite() || r.wind < 0.0 || r.wind > self.capacity {
                return bad(format!("wind {} outside [0, {}]", r.wind, self.capacity));
            }
            if !r.load.is_finite() || r.load <= 0.0 {
                return bad(format!("load {} must be positive", r.load));
            }
            if k > 0 {
                let gap = r.timestamp - self.records[k - 1].timestamp;
                if gap <= chrono::Duration::zero() {
                    return Err(DataError::TimestampOrder { line });
                }
                if gap.num_seconds() % one_hour.num_seconds() != 0 {
                    return bad("timestamps must be on an hourly grid".into());
                }
            }
        }
        Ok(())
    }

    /// Consecutive chunks of `horizon` records, each spanning contiguous hours.
    pub fn days(&self, horizon: usize) -> Result<Vec<Day<'_>>, DataError> {
        if horizon == 0 || self.records.len() % horizon != 0 {
            return Err(DataError::IncompleteDay(format!(
                "{} records do not form whole days of {horizon} hours",
                self.records.len()
            )));
        }
        let one_hour = chrono::Duration::hours(1);
        let days: Vec<Day<'_>> = self.records.chunks(horizon).collect();
        for (d, day) in days.iter().enumerate() {
            if day.windows(2).any(|w| w[1].timestamp - w[0].timestamp != one_hour) {
                return Err(DataError::IncompleteDay(format!("day {d} has a gap between hours")));
            }
        }
        Ok(days)
    }

    pub fn num_days(&self, horizon: usize) -> Result<usize, DataError> {
        self.days(horizon).map(|d| d.len())
    }

    /// Feature vectors standardized by the stored scaling (raw if none).
    pub fn standardized_features(&self) -> Vec<Vec<f64>> {
        match &self.scaling {
            Some(sc) => self.records.iter().map(|r| sc.apply(&r.features)).collect(),
            None => self.records.iter().map(|r| r.features.to_vec()).collect(),
        }
    }

    pub fn raw_features(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.features.to_vec()).collect()
    }

    pub fn winds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.wind).collect()
    }

    pub fn loads(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.load).collect()
    }

    fn with_records(&self, records: Vec<Record>) -> Self {
        Self { records, capacity: self.capacity, wind_multiplier: self.wind_multiplier, scaling: self.scaling.clone() }
    }
}

/// Mean and population standard deviation of every feature; constant
/// features get a unit deviation.
pub fn fit_scaling(records: &[Record]) -> FeatureScaling {
    let n = records.len().max(1) as f64;
    let mut mean = vec![0.0; NUM_FEATURES];
    for r in records {
        for (m, f) in mean.iter_mut().zip(&r.features) {
            *m += f;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; NUM_FEATURES];
    for r in records {
        for k in 0..NUM_FEATURES {
            var[k] += (r.features[k] - mean[k]).powi(2);
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt()).map(|s| if s > 1e-12 { s } else { 1.0 }).collect();
    FeatureScaling { mean, std }
}

/// Chronological split by whole days. Scaling constants are fitted on the
/// training part and stored on both halves.
pub fn split(set: &SampleSet, train_frac: f64, horizon: usize) -> Result<(SampleSet, SampleSet), DataError> {
    let days = set.num_days(horizon)?;
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(DataError::TooSmall(format!("training fraction {train_frac} leaves one side empty")));
    }
    let n_train = (train_frac * days as f64).round() as usize;
    if n_train == 0 || n_train >= days {
        return Err(DataError::TooSmall(format!("{days} days cannot be split at fraction {train_frac}")));
    }
    let cut = n_train * horizon;
    let scaling = fit_scaling(&set.records[..cut]);
    let mut train = set.with_records(set.records[..cut].to_vec());
    let mut test = set.with_records(set.records[cut..].to_vec());
    train.scaling = Some(scaling.clone());
    test.scaling = Some(scaling);
    Ok((train, test))
}

/// Multiplies the wind realizations and the capacity; features untouched.
pub fn scale_wind(set: &SampleSet, multiplier: f64) -> SampleSet {
    let mut out = set.clone();
    for r in &mut out.records {
        r.wind *= multiplier;
    }
    out.capacity *= multiplier;
    out.wind_multiplier *= multiplier;
    out
}
