//! Value-oriented renewable forecasting on top of an exact dispatch LP.

pub mod exec;
pub mod market;
pub mod forecaster;
pub mod fsio;
pub mod data;
pub mod training;
pub mod evaluation;
pub mod experiment;
