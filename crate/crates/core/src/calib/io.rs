//! Calibration JSON:
//!
//! ```json
//! { "coupling": [[0,1], ...],
//!   "days": [{ "date": "...", "sq_error": {"0": 0.001},
//!              "tq_error": {"0-1": 0.01}, "ro_error": {"0": [p10, p01]} }] }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::snapshot::{vectorize, CalibrationSnapshot, Schema};
use crate::error::{Error, Result};
use crate::qcore::{pair, Pair};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileJson {
    coupling: Vec<[usize; 2]>,
    days: Vec<DayJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DayJson {
    date: String,
    sq_error: BTreeMap<String, f64>,
    tq_error: BTreeMap<String, f64>,
    ro_error: BTreeMap<String, [f64; 2]>,
}

fn parse_qubit(day: &str, field: &str, key: &str) -> Result<usize> {
    key.trim().parse().map_err(|_| Error::Calibration {
        day: day.into(),
        field: field.into(),
        msg: format!("bad qubit key `{key}`"),
    })
}

fn parse_pair(day: &str, key: &str) -> Result<Pair> {
    let bad = || Error::Calibration {
        day: day.into(),
        field: "tq_error".into(),
        msg: format!("bad pair key `{key}`, expected \"a-b\""),
    };
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    Ok(pair(a, b))
}

impl DayJson {
    fn into_snapshot(self) -> Result<CalibrationSnapshot> {
        let d = self.date.clone();
        Ok(CalibrationSnapshot {
            sq_error: self
                .sq_error
                .iter()
                .map(|(k, &v)| Ok((parse_qubit(&d, "sq_error", k)?, v)))
                .collect::<Result<_>>()?,
            tq_error: self
                .tq_error
                .iter()
                .map(|(k, &v)| Ok((parse_pair(&d, k)?, v)))
                .collect::<Result<_>>()?,
            ro_error: self
                .ro_error
                .iter()
                .map(|(k, v)| Ok((parse_qubit(&d, "ro_error", k)?, (v[0], v[1]))))
                .collect::<Result<_>>()?,
            date: self.date,
        })
    }

    fn from_snapshot(s: &CalibrationSnapshot) -> Self {
        DayJson {
            date: s.date.clone(),
            sq_error: s.sq_error.iter().map(|(q, &v)| (q.to_string(), v)).collect(),
            tq_error: s
                .tq_error
                .iter()
                .map(|(&(a, b), &v)| (format!("{a}-{b}"), v))
                .collect(),
            ro_error: s
                .ro_error
                .iter()
                .map(|(q, &(a, b))| (q.to_string(), [a, b]))
                .collect(),
        }
    }
}

/// Validates a day sequence against a shared coupling set.
pub fn validate_series(coupling: &BTreeSet<Pair>, days: &[CalibrationSnapshot]) -> Result<()> {
    let Some(first) = days.first() else {
        return Ok(());
    };
    let qubits = first.qubits();
    for d in days {
        d.validate()?;
        if d.qubits() != qubits {
            return Err(Error::Calibration {
                day: d.date.clone(),
                field: "sq_error".into(),
                msg: "qubit set differs from the first day".into(),
            });
        }
        if &d.coupling() != coupling {
            return Err(Error::Calibration {
                day: d.date.clone(),
                field: "tq_error".into(),
                msg: "pairs differ from the declared coupling".into(),
            });
        }
    }
    Ok(())
}

/// Reads and validates a calibration file; days keep file order.
pub fn parse_calibrations(path: &Path) -> Result<Vec<CalibrationSnapshot>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calibrations_str(&text).map_err(|e| match e {
        Error::Parse { msg, .. } => Error::parse(path, msg),
        other => other,
    })
}

pub fn parse_calibrations_str(text: &str) -> Result<Vec<CalibrationSnapshot>> {
    let file: FileJson = serde_json::from_str(text).map_err(|e| Error::parse("<input>", e))?;
    let coupling: BTreeSet<Pair> = file.coupling.iter().map(|p| pair(p[0], p[1])).collect();
    let days = file
        .days
        .into_iter()
        .map(DayJson::into_snapshot)
        .collect::<Result<Vec<_>>>()?;
    validate_series(&coupling, &days)?;
    Ok(days)
}

pub fn calibrations_to_string(days: &[CalibrationSnapshot]) -> String {
    let coupling = days.first().map(|d| d.coupling()).unwrap_or_default();
    let file = FileJson {
        coupling: coupling.iter().map(|&(a, b)| [a, b]).collect(),
        days: days.iter().map(DayJson::from_snapshot).collect(),
    };
    serde_json::to_string_pretty(&file).expect("calibration JSON is serializable")
}

pub fn write_calibrations(path: &Path, days: &[CalibrationSnapshot]) -> Result<()> {
    std::fs::write(path, calibrations_to_string(days)).map_err(|e| Error::io(path, e))
}

/// CSV mirror: `date` then one column per schema label.
pub fn write_calibrations_csv(path: &Path, days: &[CalibrationSnapshot]) -> Result<()> {
    let Some(first) = days.first() else {
        return std::fs::write(path, "date\n").map_err(|e| Error::io(path, e));
    };
    let schema = first.schema();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    let header: Vec<String> = std::iter::once("date".to_string())
        .chain(schema.labels.iter().map(|l| l.to_string()))
        .collect();
    w.write_record(&header).map_err(|e| Error::parse(path, e))?;
    for d in days {
        let v = vectorize(d, &schema)?;
        let row: Vec<String> = std::iter::once(d.date.clone())
            .chain(v.values.iter().map(|x| format!("{x:e}")))
            .collect();
        w.write_record(&row).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Shared canonical schema of a validated series.
pub fn series_schema(days: &[CalibrationSnapshot]) -> Result<std::sync::Arc<Schema>> {
    days.first()
        .map(|d| d.schema())
        .ok_or_else(|| Error::Config("empty calibration series".into()))
}
