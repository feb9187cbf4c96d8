//! Centred sliding-window averaging of single-step attributions.
//!
//! The single-step map for reference time `T'` explains `T' - 1 -> T'` and
//! covers rows `T' - W ..= T'`. A cell at row `t` is averaged over every
//! available `T'` in `[t - W + 1, t + W - 1]` whose map covers it, so the
//! divisor is the number of contributors actually present rather than
//! `2W - 1`.

use std::collections::BTreeMap;

use crate::attribution::{AttributionMap, ChangeTarget};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::series::{extract_window, TimeSeries, WindowSpec};

/// Targets `T' - 1 -> T'` for class `class` at every `T'` leaving `history`
/// rows before the earlier window.
pub fn per_step_targets<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    class: usize,
    history: usize,
) -> Result<Vec<ChangeTarget>> {
    let first = spec.window_size + history;
    if first >= series.len() {
        return Ok(Vec::new());
    }
    let probs = (first - 1..series.len())
        .map(|t| Ok(f.predict(extract_window(series, spec, t)?.view())?[class]))
        .collect::<Result<Vec<f64>>>()?;
    Ok((first..series.len())
        .map(|t| {
            let i = t - first;
            ChangeTarget::new(t - 1, t, class, probs[i + 1] - probs[i])
        })
        .collect())
}

/// Averages `per_step` maps onto the rows of `raw`. Cells with no
/// contributor keep their raw value.
pub fn macro_aggregate(
    raw: &AttributionMap,
    per_step: &[AttributionMap],
    spec: &WindowSpec,
) -> Result<AttributionMap> {
    if per_step.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let w = spec.window_size;
    let mut by_time = BTreeMap::new();
    for m in per_step {
        let t = &m.target;
        if t.t2 != t.t1 + 1 {
            return Err(Error::InvalidTarget {
                t1: t.t1,
                t2: t.t2,
                reason: "macro aggregation needs single forward steps".into(),
            });
        }
        if m.values.ncols() != raw.values.ncols() {
            return Err(Error::ShapeMismatch {
                expected: raw.values.dim(),
                actual: m.values.dim(),
            });
        }
        m.check_shape(spec, raw.values.ncols())?;
        by_time.insert(t.t2, m);
    }

    let mut out = raw.clone();
    for i in 0..raw.rows() {
        let t = raw.start_time + i;
        let contributors: Vec<_> = by_time
            .range(t.saturating_sub(w - 1)..=t + w - 1)
            .filter(|(_, m)| (m.start_time..=m.end_time()).contains(&t))
            .map(|(_, m)| m)
            .collect();
        if contributors.is_empty() {
            continue;
        }
        let n = contributors.len() as f64;
        for d in 0..raw.values.ncols() {
            let sum: f64 = contributors
                .iter()
                .map(|m| m.values[[t - m.start_time, d]])
                .sum();
            out.values[[i, d]] = sum / n;
        }
    }
    Ok(out)
}
