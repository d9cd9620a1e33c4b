use std::path::Path;

use chrono::NaiveDateTime;

use super::{DataError, Record, SampleSet};
use crate::fsio::write_atomic;

pub const CSV_HEADER: [&str; 7] = ["timestamp", "ws10", "wd10", "ws100", "wd100", "wind_kw", "load_kw"];
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_ts(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TS_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(s.trim_end_matches('Z'), TS_FORMAT))
        .ok()
}

/// Reads a CSV with the exact header [`CSV_HEADER`]. `capacity` is the
/// wind capacity ȳ every realization must respect.
pub fn load_csv(path: &Path, capacity: f64) -> Result<SampleSet, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| DataError::SchemaMismatch(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(DataError::SchemaMismatch(format!(
            "expected header `{}`, found `{}`",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| DataError::ParseError { line, column: "-".into(), message: e.to_string() })?;
        if row.len() != CSV_HEADER.len() {
            return Err(DataError::ParseError {
                line,
                column: "-".into(),
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
        }
        let timestamp = parse_ts(&row[0]).ok_or_else(|| DataError::ParseError {
            line,
            column: CSV_HEADER[0].into(),
            message: format!("`{}` is not an ISO-8601 timestamp", &row[0]),
        })?;
        let mut vals = [0.0; 6];
        for (c, v) in vals.iter_mut().enumerate() {
            *v = row[c + 1].trim().parse::<f64>().map_err(|e| DataError::ParseError {
                line,
                column: CSV_HEADER[c + 1].into(),
                message: format!("`{}`: {e}", &row[c + 1]),
            })?;
        }
        records.push(Record {
            timestamp,
            features: [vals[0], vals[1], vals[2], vals[3]],
            wind: vals[4],
            load: vals[5],
        });
    }
    SampleSet::new(records, capacity)
}

/// Floats use the shortest representation that parses back to the same
/// value, so [`load_csv`] restores the records exactly.
pub fn write_csv(set: &SampleSet, path: &Path) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| DataError::Io(e.to_string());
    wtr.write_record(CSV_HEADER).map_err(io)?;
    for r in &set.records {
        let f = r.features;
        wtr.write_record([
            r.timestamp.format(TS_FORMAT).to_string(),
            f[0].to_string(),
            f[1].to_string(),
            f[2].to_string(),
            f[3].to_string(),
            r.wind.to_string(),
            r.load.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = wtr.into_inner().map_err(|e| DataError::Io(e.to_string()))?;
    write_atomic(path, &bytes).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))
}
