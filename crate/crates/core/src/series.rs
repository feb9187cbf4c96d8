//! Time series containers and window arithmetic.
//!
//! All time indices in this crate are 0-based absolute row indices into
//! [`TimeSeries::values`]. The window "ending at T" covers the half-open row
//! range `[T + 1 - W, T + 1)`, i.e. rows `T - W + 1 ..= T`. The first valid
//! window therefore ends at `T = W - 1`. This is the only place the mapping is
//! defined; everything else goes through [`WindowSpec::window_rows`].

use std::io::{BufRead, Write};
use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_size: usize,
    pub num_classes: usize,
}

impl WindowSpec {
    pub fn new(window_size: usize, num_classes: usize) -> Result<Self> {
        if window_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "window size must be at least 2, got {window_size}"
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        Ok(Self {
            window_size,
            num_classes,
        })
    }

    /// Row range of the window ending at `end_time` in a series of length `len`.
    pub fn window_rows(&self, end_time: usize, len: usize) -> Result<Range<usize>> {
        let w = self.window_size;
        if end_time + 1 < w || end_time >= len {
            return Err(Error::WindowOutOfRange {
                t: end_time,
                window: w,
                len,
            });
        }
        Ok(end_time + 1 - w..end_time + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub series_id: String,
    #[serde(rename = "features")]
    pub feature_names: Vec<String>,
    #[serde(with = "crate::matrix_serde")]
    pub values: Array2<f64>,
    pub labels: Vec<usize>,
}

impl TimeSeries {
    pub fn new(
        series_id: impl Into<String>,
        feature_names: Vec<String>,
        values: Array2<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let ts = Self {
            series_id: series_id.into(),
            feature_names,
            values,
            labels,
        };
        ts.validate()?;
        Ok(ts)
    }

    /// Series with generic feature names and all-zero labels.
    pub fn unlabeled(series_id: impl Into<String>, values: Array2<f64>) -> Result<Self> {
        let (len, dim) = values.dim();
        let names = (0..dim).map(|d| format!("x{d}")).collect();
        Self::new(series_id, names, values, vec![0; len])
    }

    pub fn validate(&self) -> Result<()> {
        let (len, dim) = self.values.dim();
        if self.labels.len() != len {
            return Err(Error::Schema(format!(
                "series {}: {} labels for {} rows",
                self.series_id,
                self.labels.len(),
                len
            )));
        }
        if self.feature_names.len() != dim {
            return Err(Error::Schema(format!(
                "series {}: {} feature names for {} columns",
                self.series_id,
                self.feature_names.len(),
                dim
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!(
                "series {} contains non-finite values",
                self.series_id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    /// Rows `start ..= end` as a view.
    pub fn rows(&self, start: usize, end: usize) -> ArrayView2<'_, f64> {
        self.values.slice(s![start..=end, ..])
    }
}

/// Rows `T - W + 1 ..= T` of the series.
pub fn extract_window(
    series: &TimeSeries,
    spec: &WindowSpec,
    end_time: usize,
) -> Result<Array2<f64>> {
    let rows = spec.window_rows(end_time, series.len())?;
    Ok(series.values.slice(s![rows, ..]).to_owned())
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ts: TimeSeries = serde_json::from_str(&line)
            .map_err(|e| Error::Schema(format!("line {}: {e}", lineno + 1)))?;
        ts.validate()?;
        out.push(ts);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(mut writer: W, series: &[TimeSeries]) -> Result<()> {
    for ts in series {
        serde_json::to_writer(&mut writer, ts)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
