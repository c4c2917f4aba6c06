//! Aggregated benchmark results: one row per (sweep value, method) with a mean over seeds,
//! its 95% normal-approximation half-width and the number of seeds behind it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Sample mean and 95% half-width `1.96·s/√n` (zero for a single value).
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, 1.96 * (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Sweep value as written in the CSV (e.g. `-12`, `8`, or a metric name).
    pub sweep: String,
    pub method: String,
    /// `None` when at least one seed failed at this point.
    pub value: Option<f64>,
    pub ci95: Option<f64>,
    /// Seeds that completed this point.
    pub n_seeds: usize,
}

impl ResultRow {
    /// Aggregates per-seed outcomes; any failed seed makes the row missing.
    pub fn aggregate(sweep: String, method: &str, per_seed: &[Option<f64>]) -> Self {
        let ok: Vec<f64> = per_seed.iter().flatten().copied().collect();
        let complete = ok.len() == per_seed.len();
        let stats = if complete { mean_ci95(&ok) } else { None };
        Self {
            sweep,
            method: method.to_string(),
            value: stats.map(|s| s.0),
            ci95: stats.map(|s| s.1),
            n_seeds: ok.len(),
        }
    }

    pub fn sweep_value(&self) -> Option<f64> {
        self.sweep.parse().ok()
    }
}

/// Result of one experiment over a seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub experiment: String,
    /// CSV column names of the sweep value and the metric.
    pub sweep_name: String,
    pub metric_name: String,
    pub rows: Vec<ResultRow>,
    pub seeds: Vec<u64>,
    pub wall_clock_s: f64,
}

impl BenchResult {
    pub fn row(&self, sweep: &str, method: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.sweep == sweep && r.method == method)
    }

    /// Mean of `method` at a numeric sweep value.
    pub fn value_at(&self, sweep: f64, method: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method && r.sweep_value() == Some(sweep)).and_then(|r| r.value)
    }

    /// Methods in first-appearance order.
    pub fn methods(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method.as_str()) {
                out.push(&r.method);
            }
        }
        out
    }

    /// CSV `<sweep>,method,<metric>,ci95`; missing points are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([self.sweep_name.as_str(), "method", self.metric_name.as_str(), "ci95"])?;
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for r in &self.rows {
            w.write_record([r.sweep.clone(), r.method.clone(), fmt(r.value), fmt(r.ci95)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Sweep values print without a trailing `.0` (`-12`, `0.5`).
pub(crate) fn fmt_sweep(v: f64) -> String {
    format!("{v}")
}
