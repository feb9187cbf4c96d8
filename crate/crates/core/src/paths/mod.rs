//! Path-integral attribution.
//!
//! [`ig_line_integral`] generalises integrated gradients to any piecewise
//! affine [`Path`] in window space. The SWING attributor and its ablations in
//! [`swing`] integrate along paths routed through observed windows of the
//! series.

mod integrate;
mod swing;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use integrate::{ig_line_integral, ig_segment_integrals, sample_grid};
pub use swing::{
    decompose_change, piecewise_path, rbs_attribute, retrospective_baseline, swing_attribute,
    zero_baseline_ig_change, zero_baseline_ig_terms, ChangeDecomposition, ZeroBaselineTerms,
};

use crate::error::{Error, Result};
use crate::series::{TimeSeries, WindowSpec};

/// A continuous, piecewise affine curve in `W x D` window space.
///
/// Segment `k` is affine in its local ratio `r in [0, 1]`; segment `k` at
/// `r = 1` coincides with segment `k + 1` at `r = 0`. A path with zero
/// segments is a single point.
pub trait Path: Sync {
    fn shape(&self) -> (usize, usize);

    fn segment_count(&self) -> usize;

    /// Point on segment `k` at local ratio `ratio`.
    fn eval_segment(&self, k: usize, ratio: f64) -> Array2<f64>;

    /// The single point of a zero-segment path.
    fn point(&self) -> Array2<f64>;

    /// Absolute end time of the window frame that segment `k` moves into, for
    /// paths through observed windows.
    fn segment_frame(&self, _k: usize) -> Option<usize> {
        None
    }

    /// `gamma(alpha)` with `k = floor(alpha * m)`, local ratio `alpha * m - k`;
    /// `alpha = 1` maps to the end of the last segment.
    fn eval(&self, alpha: f64) -> Array2<f64> {
        let m = self.segment_count();
        if m == 0 {
            return self.point();
        }
        let a = alpha.clamp(0.0, 1.0) * m as f64;
        let k = (a.floor() as usize).min(m - 1);
        self.eval_segment(k, a - k as f64)
    }
}

/// `(1 - alpha) * baseline + alpha * endpoint`.
#[derive(Debug, Clone)]
pub struct StraightPath {
    baseline: Array2<f64>,
    endpoint: Array2<f64>,
}

pub fn straight_path(
    baseline: ArrayView2<'_, f64>,
    endpoint: ArrayView2<'_, f64>,
) -> Result<StraightPath> {
    if baseline.dim() != endpoint.dim() {
        return Err(Error::ShapeMismatch {
            expected: endpoint.dim(),
            actual: baseline.dim(),
        });
    }
    Ok(StraightPath {
        baseline: baseline.to_owned(),
        endpoint: endpoint.to_owned(),
    })
}

impl StraightPath {
    pub fn baseline(&self) -> &Array2<f64> {
        &self.baseline
    }

    pub fn endpoint(&self) -> &Array2<f64> {
        &self.endpoint
    }
}

/// `a + r * (b - a)`, returning `b` exactly at `r = 1` and `a` wherever `a == b`.
fn lerp(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, r: f64) -> Array2<f64> {
    if r == 1.0 {
        return b.to_owned();
    }
    let mut out = a.to_owned();
    out.zip_mut_with(&b, |o, &bv| *o += r * (bv - *o));
    out
}

impl Path for StraightPath {
    fn shape(&self) -> (usize, usize) {
        self.baseline.dim()
    }

    fn segment_count(&self) -> usize {
        1
    }

    fn eval_segment(&self, _k: usize, ratio: f64) -> Array2<f64> {
        lerp(self.baseline.view(), self.endpoint.view(), ratio)
    }

    fn point(&self) -> Array2<f64> {
        self.baseline.clone()
    }
}

/// Path from the window ending at `anchor_from` to the window ending at
/// `anchor_to`, passing through every observed window in between. Segment `k`
/// runs from the window ending at `s = anchor_from + sigma * k` to the one
/// ending at `s + sigma`.
#[derive(Debug, Clone)]
pub struct PiecewisePath<'a> {
    series: &'a TimeSeries,
    window: usize,
    anchor_from: usize,
    anchor_to: usize,
}

impl<'a> PiecewisePath<'a> {
    pub(crate) fn new(
        series: &'a TimeSeries,
        spec: &WindowSpec,
        anchor_from: usize,
        anchor_to: usize,
    ) -> Result<Self> {
        let lo = anchor_from.min(anchor_to);
        let hi = anchor_from.max(anchor_to);
        if lo + 1 < spec.window_size {
            return Err(Error::HistoryUnderflow {
                what: "piecewise path",
                t: lo,
                required: spec.window_size - 1,
            });
        }
        spec.window_rows(hi, series.len())?;
        Ok(Self {
            series,
            window: spec.window_size,
            anchor_from,
            anchor_to,
        })
    }

    pub fn anchor_from(&self) -> usize {
        self.anchor_from
    }

    pub fn anchor_to(&self) -> usize {
        self.anchor_to
    }

    /// `+1` moving forward in time, `-1` backward, `0` for a point.
    pub fn direction(&self) -> isize {
        (self.anchor_to as isize - self.anchor_from as isize).signum()
    }

    /// End time of the window at the start of segment `k`.
    pub fn window_index(&self, k: usize) -> usize {
        (self.anchor_from as isize + self.direction() * k as isize) as usize
    }

    fn window_at(&self, end: usize) -> ArrayView2<'a, f64> {
        self.series.rows(end + 1 - self.window, end)
    }
}

impl Path for PiecewisePath<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.window, self.series.num_features())
    }

    fn segment_count(&self) -> usize {
        self.anchor_to.abs_diff(self.anchor_from)
    }

    fn eval_segment(&self, k: usize, ratio: f64) -> Array2<f64> {
        let s = self.window_index(k);
        let next = self.window_index(k + 1);
        lerp(self.window_at(s), self.window_at(next), ratio)
    }

    fn point(&self) -> Array2<f64> {
        self.window_at(self.anchor_from).to_owned()
    }

    fn segment_frame(&self, k: usize) -> Option<usize> {
        Some(self.window_index(k + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub n_samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { n_samples: 50 }
    }
}

impl IntegratorConfig {
    pub fn new(n_samples: usize) -> Result<Self> {
        let cfg = Self { n_samples };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Trapezoid intervals per segment for an `m`-segment path: `n_samples`
    /// is rounded up to a multiple of `m` so every kink is a grid point.
    pub fn steps_per_segment(&self, m: usize) -> usize {
        if m == 0 {
            return 0;
        }
        self.n_samples.div_ceil(m)
    }
}
