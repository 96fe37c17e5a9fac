//! Benchmark report records with fixed-order CSV and JSON serialization.

use crate::error::Result;
use crate::synth::format_float;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One benchmark measurement: a metric value for a method (with the conflict
/// sensitivity constant for the conflict-aware engine), aggregated over
/// seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub method: String,
    pub c: Option<f64>,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    /// Fixed CSV column order: method, c, metric, mean, std, runtime_s.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["method", "c", "metric", "mean", "std", "runtime_s"])?;
        for r in &self.records {
            writer.write_record([
                r.method.clone(),
                r.c.map(format_float).unwrap_or_default(),
                r.metric.clone(),
                format_float(r.mean),
                format_float(r.std),
                format_float(r.runtime_s),
            ])?;
        }
        let bytes = writer.into_inner().expect("in-memory writer");
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv_str(text: &str) -> Result<EvalReport> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut records = Vec::new();
        for row in reader.deserialize() {
            let (method, c, metric, mean, std, runtime_s): (
                String,
                Option<f64>,
                String,
                f64,
                f64,
                f64,
            ) = row?;
            records.push(EvalRecord {
                method,
                c,
                metric,
                mean,
                std,
                runtime_s,
            });
        }
        Ok(EvalReport { records })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn find(&self, method: &str, c: Option<f64>, metric: &str) -> Option<&EvalRecord> {
        self.records
            .iter()
            .find(|r| r.method == method && r.c == c && r.metric == metric)
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
