//! Shifted-window integrated gradients and its ablations.
//!
//! For a change `t1 -> t2` with baseline offset `d` (default 1), path
//! `gamma(i, j)` runs through observed windows from the one ending at
//! `T_i - d` to the one ending at `T_j`. The attribution is
//!
//! ```text
//! phi = 1/2 * [(gamma(1,2) + gamma(2,2)) - (gamma(1,1) + gamma(2,1))]
//! ```
//!
//! Each path segment moves the window ending at `s` to the one ending at
//! `s + sigma`; its `W x D` integral is added to the absolute rows of the
//! destination window `s + sigma - W + 1 ..= s + sigma`. With `W = 3`,
//! `t1 = 10`, `t2 = 11`, the path `gamma(1,2)` has segments `9 -> 10`
//! (added to rows 8..=10) and `10 -> 11` (rows 9..=11); the map covers rows
//! 8..=11. Destination frames are clamped to `[min(t1,t2), max(t1,t2)]`, which
//! only matters for offsets `d >= 2`.
//!
//! Since the four path integrals enter with `+1/2, +1/2, -1/2, -1/2`, their
//! sum telescopes to `f(t2) - f(t1)`, and swapping `t1` and `t2` swaps the
//! two groups, negating the map exactly.

use ndarray::{s, Array2};

use super::{
    ig_line_integral, ig_segment_integrals, straight_path, IntegratorConfig, Path, PiecewisePath,
};
use crate::attribution::{AttributionMap, AttributionParams, ChangeTarget};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::series::{extract_window, TimeSeries, WindowSpec};

/// Window ending at `t - offset`.
pub fn retrospective_baseline(
    series: &TimeSeries,
    spec: &WindowSpec,
    t: usize,
    offset: usize,
) -> Result<Array2<f64>> {
    if t + 1 < spec.window_size + offset {
        return Err(Error::HistoryUnderflow {
            what: "retrospective baseline",
            t,
            required: spec.window_size - 1 + offset,
        });
    }
    extract_window(series, spec, t - offset)
}

pub fn piecewise_path<'a>(
    series: &'a TimeSeries,
    spec: &WindowSpec,
    anchor_from: usize,
    anchor_to: usize,
) -> Result<PiecewisePath<'a>> {
    PiecewisePath::new(series, spec, anchor_from, anchor_to)
}

fn check_input<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
    history: usize,
) -> Result<()> {
    target.check_indices(spec, series.len(), history)?;
    let expected = (spec.window_size, series.num_features());
    if f.input_shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: f.input_shape(),
        });
    }
    Ok(())
}

/// Integral along `gamma(from -> to)`, each segment added to its destination frame.
fn path_map<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
    from: usize,
    to: usize,
    cfg: &IntegratorConfig,
) -> Result<Array2<f64>> {
    let mut map = AttributionMap::zeros(*target, spec, series.num_features(), "");
    let path = piecewise_path(series, spec, from, to)?;
    let segments = ig_segment_integrals(f, &path, target.target_class, cfg)?;
    for (k, block) in segments.iter().enumerate() {
        let frame = path
            .segment_frame(k)
            .expect("piecewise segments have frames")
            .clamp(target.earliest(), target.latest());
        map.add_window(frame, block, 1.0);
    }
    Ok(map.values)
}

fn params(cfg: &IntegratorConfig, offset: usize) -> AttributionParams {
    AttributionParams {
        n_samples: Some(cfg.n_samples),
        offset: Some(offset),
        seed: None,
    }
}

/// Shifted-window integrated gradients with retrospective baselines at
/// `offset` steps back, all four baseline/target path pairs, and paths routed
/// through observed windows.
pub fn swing_attribute<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
    cfg: &IntegratorConfig,
    offset: usize,
) -> Result<AttributionMap> {
    check_input(f, series, spec, target, offset)?;
    let (t1, t2) = (target.t1, target.t2);
    let path = |i: usize, j: usize| path_map(f, series, spec, target, i - offset, j, cfg);
    let to_t2 = path(t1, t2)? + &path(t2, t2)?;
    let to_t1 = path(t1, t1)? + &path(t2, t1)?;
    let values = (to_t2 - &to_t1) * 0.5;
    Ok(AttributionMap {
        start_time: target.start_time(spec),
        values,
        target: *target,
        method_name: "swing".into(),
        params: params(cfg, offset),
    })
}

/// Ablation: only the same-index paths, `gamma(2,2) - gamma(1,1)`.
pub fn rbs_attribute<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
    cfg: &IntegratorConfig,
    offset: usize,
) -> Result<AttributionMap> {
    check_input(f, series, spec, target, offset)?;
    let (t1, t2) = (target.t1, target.t2);
    let later = path_map(f, series, spec, target, t2 - offset, t2, cfg)?;
    let earlier = path_map(f, series, spec, target, t1 - offset, t1, cfg)?;
    Ok(AttributionMap {
        start_time: target.start_time(spec),
        values: later - &earlier,
        target: *target,
        method_name: "rbs".into(),
        params: params(cfg, offset),
    })
}

/// Zero-baseline integrated gradients of each window, in window coordinates.
#[derive(Debug, Clone)]
pub struct ZeroBaselineTerms {
    /// Attribution of `f(window at t2)`.
    pub at_t2: Array2<f64>,
    /// Attribution of `f(window at t1)`.
    pub at_t1: Array2<f64>,
}

pub fn zero_baseline_ig_terms<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
    cfg: &IntegratorConfig,
) -> Result<ZeroBaselineTerms> {
    check_input(f, series, spec, target, 0)?;
    let ig = |t: usize| -> Result<Array2<f64>> {
        let x = extract_window(series, spec, t)?;
        let zero = Array2::zeros(x.dim());
        ig_line_integral(
            f,
            &straight_path(zero.view(), x.view())?,
            target.target_class,
            cfg,
        )
    };
    Ok(ZeroBaselineTerms {
        at_t2: ig(target.t2)?,
        at_t1: ig(target.t1)?,
    })
}

/// Ablation without retrospective baselines or historical paths:
/// zero-baseline IG at `t2` minus zero-baseline IG at `t1`, by absolute time.
pub fn zero_baseline_ig_change<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
    cfg: &IntegratorConfig,
) -> Result<AttributionMap> {
    let terms = zero_baseline_ig_terms(f, series, spec, target, cfg)?;
    let mut map = AttributionMap::zeros(*target, spec, series.num_features(), "ig-zero");
    map.add_window(target.t2, &terms.at_t2, 1.0);
    map.add_window(target.t1, &terms.at_t1, -1.0);
    map.params = AttributionParams {
        n_samples: Some(cfg.n_samples),
        offset: None,
        seed: None,
    };
    Ok(map)
}

/// Prediction change split into rows entering, shared by, and leaving the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeDecomposition {
    /// Rows `t1 + 1 ..= t2`, attributed at `t2`.
    pub newest: f64,
    /// Rows `t2 - W + 1 ..= t1`, attribution at `t2` minus attribution at `t1`.
    pub delayed: f64,
    /// Rows `t1 - W + 1 ..= t2 - W`, attributed at `t1`.
    pub oldest: f64,
}

impl ChangeDecomposition {
    /// `newest + delayed - oldest`.
    pub fn total(&self) -> f64 {
        self.newest + self.delayed - self.oldest
    }
}

/// Three-term split of two fixed-baseline attributions (forward targets only).
pub fn decompose_change(
    terms: &ZeroBaselineTerms,
    spec: &WindowSpec,
    target: &ChangeTarget,
) -> Result<ChangeDecomposition> {
    if target.t1 >= target.t2 {
        return Err(Error::InvalidTarget {
            t1: target.t1,
            t2: target.t2,
            reason: "decomposition needs t1 < t2".into(),
        });
    }
    let w = spec.window_size;
    let gap = target.t2 - target.t1;
    // In window coordinates: rows of the t2 window shared with t1 are 0..w-gap,
    // rows of the t1 window that drop out are 0..gap.
    let newest = terms.at_t2.slice(s![w - gap.., ..]).sum();
    let delayed =
        terms.at_t2.slice(s![..w - gap, ..]).sum() - terms.at_t1.slice(s![gap.., ..]).sum();
    let oldest = terms.at_t1.slice(s![..gap, ..]).sum();
    Ok(ChangeDecomposition {
        newest,
        delayed,
        oldest,
    })
}
