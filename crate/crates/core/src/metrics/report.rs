use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::Substitution;
use crate::error::{Error, Result};

pub const METRIC_NAMES: [&str; 9] = [
    "cpd", "aupd", "mpd", "aumpd", "cpp", "aupp", "mpp", "aumpp", "corr",
];

/// Unscaled scores of one target. `corr` is `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub sample: usize,
    pub series_id: String,
    pub t1: usize,
    pub t2: usize,
    pub class: usize,
    pub delta: f64,
    pub cpd: f64,
    pub aupd: f64,
    pub mpd: f64,
    pub aumpd: f64,
    pub cpp: f64,
    pub aupp: f64,
    pub mpp: f64,
    pub aumpp: f64,
    pub corr: Option<f64>,
}

impl SampleScores {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "cpd" => Some(self.cpd),
            "aupd" => Some(self.aupd),
            "mpd" => Some(self.mpd),
            "aumpd" => Some(self.aumpd),
            "cpp" => Some(self.cpp),
            "aupp" => Some(self.aupp),
            "mpp" => Some(self.mpp),
            "aumpp" => Some(self.aumpp),
            "corr" => self.corr,
            _ => None,
        }
    }
}

/// Mean and standard error of one metric over the samples where it is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub n: usize,
    /// Samples where the metric was undefined.
    pub missing: usize,
    /// Display multiplier; stored values are unscaled.
    pub scale: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64], missing: usize, scale: f64) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: None,
                stderr: None,
                n,
                missing,
                scale,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean: Some(mean),
            stderr: Some(stderr),
            n,
            missing,
            scale,
        }
    }

    /// `mean +- stderr` after scaling, or `-` when undefined.
    pub fn display(&self, precision: usize) -> String {
        match (self.mean, self.stderr) {
            (Some(m), Some(s)) => format!(
                "{:.p$}±{:.p$}",
                m * self.scale,
                s * self.scale,
                p = precision
            ),
            _ => "-".into(),
        }
    }
}

/// Per-sample scores of one attributor plus their summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub method: String,
    pub k: usize,
    pub substitution: Substitution,
    pub samples: Vec<SampleScores>,
}

impl MetricReport {
    /// `1000` for every metric except `corr`.
    pub fn scale_of(metric: &str) -> f64 {
        if metric == "corr" {
            1.0
        } else {
            1e3
        }
    }

    pub fn summary(&self, metric: &str) -> MetricSummary {
        let values: Vec<f64> = self
            .samples
            .iter()
            .filter_map(|s| s.metric(metric))
            .collect();
        let missing = self.samples.len() - values.len();
        MetricSummary::from_values(&values, missing, Self::scale_of(metric))
    }

    pub fn summaries(&self) -> Vec<(&'static str, MetricSummary)> {
        METRIC_NAMES.iter().map(|&m| (m, self.summary(m))).collect()
    }

    /// `{"method", "k", "substitution", "<metric>": {"mean", "stderr", "n", "missing", "scale"}, ...}`.
    pub fn summary_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("method".into(), json!(self.method));
        obj.insert("k".into(), json!(self.k));
        obj.insert("substitution".into(), json!(self.substitution));
        for (name, s) in self.summaries() {
            obj.insert(
                name.into(),
                serde_json::to_value(s).expect("summary serialises"),
            );
        }
        Value::Object(obj)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(s).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SampleScores>> {
        csv::Reader::from_reader(reader)
            .deserialize()
            .map(|r| r.map_err(csv_error))
            .collect()
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Schema(format!("csv: {e}"))
}
