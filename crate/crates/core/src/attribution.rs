//! Change targets and attribution maps.

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{TimeSeries, WindowSpec};

/// Which prediction change is being explained: the class-`target_class`
/// probability moving by `delta` between the windows ending at `t1` and `t2`.
///
/// Forward targets have `t1 < t2`. [`ChangeTarget::reversed`] produces the
/// backward change `t2 -> t1`, which attributors accept so that reversal can be
/// checked; its attribution range is the same set of rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeTarget {
    pub t1: usize,
    pub t2: usize,
    pub target_class: usize,
    pub delta: f64,
}

impl ChangeTarget {
    pub fn new(t1: usize, t2: usize, target_class: usize, delta: f64) -> Self {
        Self {
            t1,
            t2,
            target_class,
            delta,
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            t1: self.t2,
            t2: self.t1,
            target_class: self.target_class,
            delta: -self.delta,
        }
    }

    pub fn earliest(&self) -> usize {
        self.t1.min(self.t2)
    }

    pub fn latest(&self) -> usize {
        self.t1.max(self.t2)
    }

    pub fn gap(&self) -> usize {
        self.latest() - self.earliest()
    }

    /// First absolute row of the attribution range.
    pub fn start_time(&self, spec: &WindowSpec) -> usize {
        self.earliest() + 1 - spec.window_size
    }

    /// Rows in the attribution range: `|t2 - t1| + W`.
    pub fn span(&self, spec: &WindowSpec) -> usize {
        self.gap() + spec.window_size
    }

    /// Checks the index invariants. `history` is the number of extra rows
    /// needed before the earliest window (1 for retrospective baselines,
    /// 0 for the plain wrapper).
    pub fn check_indices(&self, spec: &WindowSpec, len: usize, history: usize) -> Result<()> {
        let fail = |reason: String| Error::InvalidTarget {
            t1: self.t1,
            t2: self.t2,
            reason,
        };
        let w = spec.window_size;
        if self.t1 == self.t2 {
            return Err(fail("t1 and t2 must differ".into()));
        }
        if self.gap() >= w {
            return Err(fail(format!("|t2 - t1| must be below W={w}")));
        }
        if self.latest() >= len {
            return Err(fail(format!("series has only {len} rows")));
        }
        if self.earliest() + 1 < w + history {
            return Err(Error::HistoryUnderflow {
                what: "change target",
                t: self.earliest(),
                required: w - 1 + history,
            });
        }
        if self.target_class >= spec.num_classes {
            return Err(fail(format!(
                "class {} out of range for C={}",
                self.target_class, spec.num_classes
            )));
        }
        Ok(())
    }

    /// The concatenated input `X[start ..= latest]` seen by the wrapper.
    pub fn concat_input<'a>(
        &self,
        series: &'a TimeSeries,
        spec: &WindowSpec,
    ) -> ArrayView2<'a, f64> {
        series.rows(self.start_time(spec), self.latest())
    }

    /// Row offsets of the `t1` and `t2` windows inside the concatenated input.
    pub fn window_offsets(&self, spec: &WindowSpec) -> (usize, usize) {
        let start = self.start_time(spec);
        let w = spec.window_size;
        (self.t1 + 1 - w - start, self.t2 + 1 - w - start)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributionParams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub offset: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

/// Attributions over absolute rows `start_time ..= start_time + rows - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "AttributionWire", try_from = "AttributionWire")]
pub struct AttributionMap {
    pub start_time: usize,
    pub values: Array2<f64>,
    pub target: ChangeTarget,
    pub method_name: String,
    pub params: AttributionParams,
}

impl AttributionMap {
    pub fn zeros(
        target: ChangeTarget,
        spec: &WindowSpec,
        num_features: usize,
        method: &str,
    ) -> Self {
        Self {
            start_time: target.start_time(spec),
            values: Array2::zeros((target.span(spec), num_features)),
            target,
            method_name: method.to_string(),
            params: AttributionParams::default(),
        }
    }

    pub fn with_params(mut self, params: AttributionParams) -> Self {
        self.params = params;
        self
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn end_time(&self) -> usize {
        self.start_time + self.values.nrows() - 1
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Sum over absolute rows `from ..= to` (clipped to the map).
    pub fn row_sum(&self, from: usize, to: usize) -> f64 {
        if to < from || to < self.start_time || from > self.end_time() {
            return 0.0;
        }
        let a = from.max(self.start_time) - self.start_time;
        let b = to.min(self.end_time()) - self.start_time;
        self.values.slice(s![a..=b, ..]).sum()
    }

    /// Adds `coef * block` to the rows of the window ending at absolute `frame_end`.
    pub(crate) fn add_window(&mut self, frame_end: usize, block: &Array2<f64>, coef: f64) {
        let w = block.nrows();
        let first = frame_end + 1 - w - self.start_time;
        let mut dst = self.values.slice_mut(s![first..first + w, ..]);
        dst.scaled_add(coef, block);
    }

    pub fn check_shape(&self, spec: &WindowSpec, num_features: usize) -> Result<()> {
        let expected = (self.target.span(spec), num_features);
        if self.values.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: self.values.dim(),
            });
        }
        if self.start_time != self.target.start_time(spec) {
            return Err(Error::Schema(format!(
                "map starts at {} but target range starts at {}",
                self.start_time,
                self.target.start_time(spec)
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema(
                "attribution contains non-finite values".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct AttributionWire {
    method: String,
    t1: usize,
    t2: usize,
    class: usize,
    delta: f64,
    start_time: usize,
    values: Vec<Vec<f64>>,
    params: AttributionParams,
}

impl From<AttributionMap> for AttributionWire {
    fn from(m: AttributionMap) -> Self {
        Self {
            method: m.method_name,
            t1: m.target.t1,
            t2: m.target.t2,
            class: m.target.target_class,
            delta: m.target.delta,
            start_time: m.start_time,
            values: m.values.outer_iter().map(|r| r.to_vec()).collect(),
            params: m.params,
        }
    }
}

impl TryFrom<AttributionWire> for AttributionMap {
    type Error = String;

    fn try_from(w: AttributionWire) -> std::result::Result<Self, String> {
        Ok(Self {
            start_time: w.start_time,
            values: crate::matrix_serde::from_rows(w.values)?,
            target: ChangeTarget::new(w.t1, w.t2, w.class, w.delta),
            method_name: w.method,
            params: w.params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_and_offsets() {
        let spec = WindowSpec::new(4, 2).unwrap();
        let t = ChangeTarget::new(6, 8, 1, 0.1);
        assert_eq!(t.start_time(&spec), 3);
        assert_eq!(t.span(&spec), 6);
        assert_eq!(t.window_offsets(&spec), (0, 2));
        let r = t.reversed();
        assert_eq!(r.start_time(&spec), 3);
        assert_eq!(r.window_offsets(&spec), (2, 0));
    }

    #[test]
    fn index_checks() {
        let spec = WindowSpec::new(4, 2).unwrap();
        assert!(ChangeTarget::new(4, 5, 0, 0.0)
            .check_indices(&spec, 10, 1)
            .is_ok());
        assert!(matches!(
            ChangeTarget::new(3, 5, 0, 0.0).check_indices(&spec, 10, 1),
            Err(Error::HistoryUnderflow { .. })
        ));
        assert!(ChangeTarget::new(3, 5, 0, 0.0)
            .check_indices(&spec, 10, 0)
            .is_ok());
        assert!(ChangeTarget::new(4, 8, 0, 0.0)
            .check_indices(&spec, 10, 1)
            .is_err());
        assert!(ChangeTarget::new(4, 4, 0, 0.0)
            .check_indices(&spec, 10, 1)
            .is_err());
        assert!(ChangeTarget::new(8, 10, 0, 0.0)
            .check_indices(&spec, 10, 1)
            .is_err());
        assert!(ChangeTarget::new(4, 5, 2, 0.0)
            .check_indices(&spec, 10, 1)
            .is_err());
    }

    #[test]
    fn json_layout() {
        let spec = WindowSpec::new(2, 2).unwrap();
        let mut m = AttributionMap::zeros(ChangeTarget::new(3, 4, 1, 0.25), &spec, 1, "swing");
        m.values[[2, 0]] = 1.5;
        m.params.n_samples = Some(50);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"method":"swing","t1":3,"t2":4,"class":1,"delta":0.25,"start_time":2,"values":[[0.0],[0.0],[1.5]],"params":{"n_samples":50}}"#
        );
        let back: AttributionMap = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn row_sum_clips() {
        let spec = WindowSpec::new(2, 2).unwrap();
        let mut m = AttributionMap::zeros(ChangeTarget::new(3, 4, 0, 0.0), &spec, 2, "x");
        m.values.fill(1.0);
        assert_eq!(m.row_sum(0, 10), 6.0);
        assert_eq!(m.row_sum(4, 4), 2.0);
        assert_eq!(m.row_sum(5, 9), 0.0);
    }
}
