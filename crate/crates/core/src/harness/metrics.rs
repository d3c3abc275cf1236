use std::path::Path;

use serde::{Deserialize, Serialize};

use super::timeline::TimelineResult;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.8, 0.7, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub mean_acc: f64,
    /// Population variance of the daily accuracies.
    pub variance: f64,
    pub thresholds: Vec<f64>,
    /// Days with accuracy strictly above each threshold.
    pub days_over: Vec<usize>,
    pub vs_baseline: f64,
    pub days_over_delta: Vec<i64>,
    pub optimizations: usize,
    pub wall_time_s: f64,
}

fn stats(acc: &[f64], thresholds: &[f64]) -> (f64, f64, Vec<usize>) {
    let n = acc.len().max(1) as f64;
    let mean = acc.iter().sum::<f64>() / n;
    let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let over = thresholds
        .iter()
        .map(|&t| acc.iter().filter(|&&a| a > t).count())
        .collect();
    (mean, var, over)
}

/// Summary row for `result`, with deltas against `baseline`.
pub fn summarize(result: &TimelineResult, thresholds: &[f64], baseline: &TimelineResult) -> Result<SummaryRow> {
    let dates = |r: &TimelineResult| r.records.iter().map(|d| d.date.clone()).collect::<Vec<_>>();
    if dates(result) != dates(baseline) {
        return Err(Error::Config(format!(
            "{} and {} cover different days",
            result.strategy, baseline.strategy
        )));
    }
    let (mean, var, over) = stats(&result.accuracies(), thresholds);
    let (b_mean, _, b_over) = stats(&baseline.accuracies(), thresholds);
    Ok(SummaryRow {
        strategy: result.strategy.to_string(),
        mean_acc: mean,
        variance: var,
        thresholds: thresholds.to_vec(),
        days_over_delta: over.iter().zip(&b_over).map(|(&a, &b)| a as i64 - b as i64).collect(),
        days_over: over,
        vs_baseline: mean - b_mean,
        optimizations: result.online_optimizations,
        wall_time_s: result.wall_time_s,
    })
}

/// Columns: strategy, mean_acc, vs_baseline, variance, then per threshold
/// `days_over_<t>` and `delta_<t>`, then optimizations and wall time.
pub fn write_table_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    let thresholds = rows.first().map(|r| r.thresholds.clone()).unwrap_or_default();
    let mut header = vec![
        "strategy".to_string(),
        "mean_acc".into(),
        "vs_baseline".into(),
        "variance".into(),
    ];
    for t in &thresholds {
        header.push(format!("days_over_{t}"));
        header.push(format!("delta_{t}"));
    }
    header.push("optimizations".into());
    header.push("wall_time_s".into());
    w.write_record(&header).map_err(|e| Error::parse(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.strategy.clone(),
            format!("{:.4}", r.mean_acc),
            format!("{:+.4}", r.vs_baseline),
            format!("{:.6}", r.variance),
        ];
        for (o, d) in r.days_over.iter().zip(&r.days_over_delta) {
            rec.push(o.to_string());
            rec.push(format!("{d:+}"));
        }
        rec.push(r.optimizations.to_string());
        rec.push(format!("{:.3}", r.wall_time_s));
        w.write_record(&rec).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
