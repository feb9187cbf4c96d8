//! Sequential-removal metrics for attribution maps.
//!
//! Cells of the concatenated input `X[t1 - W + 1 ..= t2]` are removed one at
//! a time in saliency order and replaced by a substitute value (forward fill
//! by default). Each removal step records `|g(X_k) - g(X_{k+1})|_1`; the CPD
//! family removes the most salient cells first, the CPP family the least
//! salient. Ranking is by `|phi|` with ties broken by earlier time, then lower
//! feature index. Coordinates here are rows of the concatenated input.

mod macro_agg;
mod report;
mod suite;

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use macro_agg::{macro_aggregate, per_step_targets};
pub use report::{MetricReport, MetricSummary, SampleScores, METRIC_NAMES};
pub use suite::{evaluate_suite, SampleRef, SuiteConfig};

use crate::attribution::{AttributionMap, ChangeTarget};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::series::{TimeSeries, WindowSpec};

/// Replacement value for a removed cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substitution {
    /// Nearest earlier retained value on the same feature. A removed cell with
    /// no retained predecessor keeps its original value and is carried forward
    /// like a retained one.
    #[default]
    ForwardFill,
    Zero,
    /// Mean of the feature over the original concatenated input.
    Average,
}

impl Substitution {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ForwardFill => "forward-fill",
            Self::Zero => "zero",
            Self::Average => "average",
        }
    }
}

impl std::str::FromStr for Substitution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward-fill" => Ok(Self::ForwardFill),
            "zero" => Ok(Self::Zero),
            "average" => Ok(Self::Average),
            other => Err(Error::InvalidConfig(format!(
                "unknown substitution {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Most salient first (CPD family).
    Descending,
    /// Least salient first (CPP family).
    Ascending,
}

fn mask_of(dim: (usize, usize), removed: &[(usize, usize)]) -> Result<Array2<bool>> {
    let mut mask = Array2::from_elem(dim, false);
    for &(t, d) in removed {
        if t >= dim.0 || d >= dim.1 {
            return Err(Error::CoordinateOutOfRange {
                t,
                d,
                rows: dim.0,
                cols: dim.1,
            });
        }
        mask[[t, d]] = true;
    }
    Ok(mask)
}

/// Rewrites column `d` of `out` from `original` and `mask`; returns the range
/// of rows whose value changed.
fn fill_column(
    original: ArrayView2<'_, f64>,
    mask: &Array2<bool>,
    out: &mut Array2<f64>,
    d: usize,
    mode: Substitution,
) -> Option<(usize, usize)> {
    let mean = match mode {
        Substitution::Average => original.column(d).mean().unwrap_or(0.0),
        _ => 0.0,
    };
    let mut last = None;
    let mut changed: Option<(usize, usize)> = None;
    for t in 0..original.nrows() {
        let v = if mask[[t, d]] {
            match mode {
                Substitution::ForwardFill => last.unwrap_or(original[[t, d]]),
                Substitution::Zero => 0.0,
                Substitution::Average => mean,
            }
        } else {
            original[[t, d]]
        };
        last = Some(v);
        if out[[t, d]].to_bits() != v.to_bits() {
            out[[t, d]] = v;
            changed = Some(changed.map_or((t, t), |(lo, _)| (lo, t)));
        }
    }
    changed
}

/// `original` with every cell in `removed` replaced under `mode`.
pub fn substitute(
    original: ArrayView2<'_, f64>,
    removed: &[(usize, usize)],
    mode: Substitution,
) -> Result<Array2<f64>> {
    let mask = mask_of(original.dim(), removed)?;
    let mut out = original.to_owned();
    for d in 0..original.ncols() {
        fill_column(original, &mask, &mut out, d, mode);
    }
    Ok(out)
}

/// Each removed cell takes the nearest earlier value on its feature that is
/// not itself removed. Leading removed cells keep their original values,
/// which then fill later removed cells.
pub fn forward_fill_remove(
    original: ArrayView2<'_, f64>,
    removed: &[(usize, usize)],
) -> Result<Array2<f64>> {
    substitute(original, removed, Substitution::ForwardFill)
}

/// All cells sorted by `|score|` in `order`; ties by row, then column.
pub fn rank_cells(scores: ArrayView2<'_, f64>, order: Order) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..scores.nrows())
        .flat_map(|t| (0..scores.ncols()).map(move |d| (t, d)))
        .collect();
    cells.sort_by(|&a, &b| {
        let (x, y) = (scores[a].abs(), scores[b].abs());
        let by_score = match order {
            Order::Descending => y.total_cmp(&x),
            Order::Ascending => x.total_cmp(&y),
        };
        by_score.then(a.cmp(&b))
    });
    cells
}

/// Per-step L1 changes of the wrapper output along one removal sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalCurve {
    /// Removed cells in order.
    pub order: Vec<(usize, usize)>,
    /// `steps[k] = |g(X_k) - g(X_{k+1})|_1`.
    pub steps: Vec<f64>,
}

impl RemovalCurve {
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    /// Cumulative change after the first `k` removals.
    pub fn cumulative(&self, k: usize) -> f64 {
        self.steps[..k].iter().sum()
    }

    /// `1/(2k) * sum_{j=1..k} (C(j) + C(j-1))` for the cumulative curve `C`.
    pub fn area(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.steps.len() {
            return Err(Error::KOutOfRange {
                k,
                cells: self.steps.len(),
            });
        }
        let mut prev = 0.0;
        let mut acc = 0.0;
        for step in &self.steps[..k] {
            let next = prev + step;
            acc += prev + next;
            prev = next;
        }
        Ok(acc / (2.0 * k as f64))
    }
}

/// Removes the first `k` cells of `scores` in `order` from `concat`, one at a
/// time. Windows of `g` are re-predicted only when a removal changes a row they
/// contain.
#[allow(clippy::too_many_arguments)]
pub fn removal_curve<C: Classifier + ?Sized>(
    f: &C,
    spec: &WindowSpec,
    target: &ChangeTarget,
    concat: ArrayView2<'_, f64>,
    scores: ArrayView2<'_, f64>,
    order: Order,
    k: usize,
    mode: Substitution,
) -> Result<RemovalCurve> {
    if scores.dim() != concat.dim() {
        return Err(Error::ShapeMismatch {
            expected: concat.dim(),
            actual: scores.dim(),
        });
    }
    if k > concat.len() {
        return Err(Error::KOutOfRange {
            k,
            cells: concat.len(),
        });
    }
    let w = spec.window_size;
    let (o1, o2) = target.window_offsets(spec);
    if o1.max(o2) + w > concat.nrows() {
        return Err(Error::ShapeMismatch {
            expected: (target.span(spec), concat.ncols()),
            actual: concat.dim(),
        });
    }
    let mut order_cells = rank_cells(scores, order);
    order_cells.truncate(k);

    let mut work = concat.to_owned();
    let mut mask = Array2::from_elem(concat.dim(), false);
    let offsets = [o1, o2];
    let mut p: Vec<Array1<f64>> = offsets
        .iter()
        .map(|&o| f.predict(work.slice(s![o..o + w, ..])))
        .collect::<Result<_>>()?;
    let mut g = &p[1] - &p[0];
    let mut steps = Vec::with_capacity(k);
    for &(t, d) in &order_cells {
        mask[[t, d]] = true;
        if let Some((lo, hi)) = fill_column(concat, &mask, &mut work, d, mode) {
            for (i, &o) in offsets.iter().enumerate() {
                if lo < o + w && hi >= o {
                    p[i] = f.predict(work.slice(s![o..o + w, ..]))?;
                }
            }
        }
        let next = &p[1] - &p[0];
        steps.push((&g - &next).mapv(f64::abs).sum());
        g = next;
    }
    Ok(RemovalCurve {
        order: order_cells,
        steps,
    })
}

fn map_curve<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    map: &AttributionMap,
    order: Order,
    k: usize,
    mode: Substitution,
) -> Result<RemovalCurve> {
    map.check_shape(spec, series.num_features())?;
    let concat = map.target.concat_input(series, spec);
    removal_curve(
        f,
        spec,
        &map.target,
        concat,
        map.values.view(),
        order,
        k,
        mode,
    )
}

/// Cumulative prediction difference after removing the `k` most salient
/// cells, and its per-step changes.
pub fn cpd<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    map: &AttributionMap,
    k: usize,
    mode: Substitution,
) -> Result<(f64, Vec<f64>)> {
    let curve = map_curve(f, series, spec, map, Order::Descending, k, mode)?;
    Ok((curve.cumulative(k), curve.steps))
}

/// Cumulative prediction change after removing the `k` least salient cells,
/// and its per-step changes.
pub fn cpp<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    map: &AttributionMap,
    k: usize,
    mode: Substitution,
) -> Result<(f64, Vec<f64>)> {
    let curve = map_curve(f, series, spec, map, Order::Ascending, k, mode)?;
    Ok((curve.cumulative(k), curve.steps))
}

pub fn aupd<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    map: &AttributionMap,
    k: usize,
    mode: Substitution,
) -> Result<f64> {
    map_curve(f, series, spec, map, Order::Descending, k, mode)?.area(k)
}

pub fn aupp<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    map: &AttributionMap,
    k: usize,
    mode: Substitution,
) -> Result<f64> {
    map_curve(f, series, spec, map, Order::Ascending, k, mode)?.area(k)
}

/// Pearson correlation, or `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between `|phi|` of the `k` cells removed first by `top` and by
/// `bottom` and the wrapper change each removal caused.
pub fn corr_from_curves(
    scores: ArrayView2<'_, f64>,
    top: &RemovalCurve,
    bottom: &RemovalCurve,
    k: usize,
) -> Result<Option<f64>> {
    if 2 * k > scores.len() || k > top.k() || k > bottom.k() {
        return Err(Error::KOutOfRange {
            k,
            cells: scores.len(),
        });
    }
    let mut phi = Vec::with_capacity(2 * k);
    let mut diff = Vec::with_capacity(2 * k);
    for curve in [top, bottom] {
        for (cell, step) in curve.order.iter().zip(&curve.steps).take(k) {
            phi.push(scores[*cell].abs());
            diff.push(*step);
        }
    }
    Ok(pearson(&phi, &diff))
}

pub fn corr_metric<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    map: &AttributionMap,
    k: usize,
    mode: Substitution,
) -> Result<Option<f64>> {
    if 2 * k > map.cells() {
        return Err(Error::KOutOfRange {
            k,
            cells: map.cells(),
        });
    }
    let top = map_curve(f, series, spec, map, Order::Descending, k, mode)?;
    let bottom = map_curve(f, series, spec, map, Order::Ascending, k, mode)?;
    corr_from_curves(map.values.view(), &top, &bottom, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::wrapper_eval_concat;
    use crate::models::{AffineScorer, Link, WindowMlp};
    use crate::rng;
    use ndarray::array;

    fn noisy(len: usize, dim: usize, seed: u64) -> TimeSeries {
        let mut r = rng::rng(seed);
        let values = Array2::from_shape_simple_fn((len, dim), || rng::symmetric(&mut r, 1.0));
        TimeSeries::unlabeled("n", values).unwrap()
    }

    /// Recomputes `g` from scratch after every removal.
    fn brute_force_steps<C: Classifier>(
        f: &C,
        spec: &WindowSpec,
        target: &ChangeTarget,
        concat: ArrayView2<'_, f64>,
        order: &[(usize, usize)],
        mode: Substitution,
    ) -> Vec<f64> {
        let mut prev = wrapper_eval_concat(f, spec, target, concat).unwrap();
        (1..=order.len())
            .map(|k| {
                let x = substitute(concat, &order[..k], mode).unwrap();
                let g = wrapper_eval_concat(f, spec, target, x.view()).unwrap();
                let step = (&prev - &g).mapv(f64::abs).sum();
                prev = g;
                step
            })
            .collect()
    }

    #[test]
    fn forward_fill_examples() {
        let col = array![[1.0], [2.0], [3.0]];
        assert_eq!(forward_fill_remove(col.view(), &[]).unwrap(), col);
        assert_eq!(
            forward_fill_remove(col.view(), &[(1, 0)]).unwrap(),
            array![[1.0], [1.0], [3.0]]
        );
        assert_eq!(
            forward_fill_remove(col.view(), &[(1, 0), (2, 0)]).unwrap(),
            array![[1.0], [1.0], [1.0]]
        );
        // no retained predecessor: the first row keeps its value and fills the next
        assert_eq!(
            forward_fill_remove(col.view(), &[(0, 0), (1, 0)]).unwrap(),
            array![[1.0], [1.0], [3.0]]
        );
        assert!(matches!(
            forward_fill_remove(col.view(), &[(3, 0)]),
            Err(Error::CoordinateOutOfRange { t: 3, .. })
        ));
    }

    #[test]
    fn other_substitutions() {
        let x = array![[1.0, 4.0], [2.0, 6.0], [3.0, 8.0]];
        assert_eq!(
            substitute(x.view(), &[(1, 1)], Substitution::Zero).unwrap()[[1, 1]],
            0.0
        );
        assert_eq!(
            substitute(x.view(), &[(0, 1)], Substitution::Average).unwrap()[[0, 1]],
            6.0
        );
        for m in [
            Substitution::ForwardFill,
            Substitution::Zero,
            Substitution::Average,
        ] {
            assert_eq!(m.name().parse::<Substitution>().unwrap(), m);
        }
    }

    #[test]
    fn ranking_breaks_ties_by_time_then_feature() {
        let s = array![[0.5, -2.0], [2.0, 0.5], [-0.5, 1.0]];
        assert_eq!(
            rank_cells(s.view(), Order::Descending),
            vec![(0, 1), (1, 0), (2, 1), (0, 0), (1, 1), (2, 0)]
        );
        assert_eq!(
            rank_cells(s.view(), Order::Ascending),
            vec![(0, 0), (1, 1), (2, 0), (2, 1), (0, 1), (1, 0)]
        );
    }

    #[test]
    fn two_by_one_toy_matches_hand_sequence() {
        // W = 1 is not a valid window, so use W = 2 with one feature and a
        // gap of one: the concatenated input has 3 rows, two of them movable.
        let spec = WindowSpec::new(2, 2).unwrap();
        let w = ndarray::Array3::from_shape_vec((2, 1, 2), vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        let f = AffineScorer::from_parts(&w, &array![0.0, 0.0], Link::IdentityScore).unwrap();
        let ts = TimeSeries::unlabeled("t", array![[0.0], [1.0], [3.0], [6.0]]).unwrap();
        let target = ChangeTarget::new(2, 3, 0, 0.0);
        let concat = target.concat_input(&ts, &spec);
        // rows 1..=3 = [1, 3, 6]; scores rank row 2 first, then row 1 (no predecessor), row 0
        let scores = array![[0.1], [0.2], [0.3]];
        let curve = removal_curve(
            &f,
            &spec,
            &target,
            concat,
            scores.view(),
            Order::Descending,
            3,
            Substitution::ForwardFill,
        )
        .unwrap();
        assert_eq!(curve.order, vec![(2, 0), (1, 0), (0, 0)]);
        // g_0 = (3 + 2*6) - (1 + 2*3) = 8. Remove row 2 (6 -> 3): g_0 = (3 + 6) - 7 = 2,
        // |dg|_1 = 2 * 6. Remove row 1 (3 -> 1, row 2 follows): g_0 = (1 + 2) - (1 + 2) = 0,
        // |dg|_1 = 2 * 2. Row 0 has no predecessor: no change.
        assert_eq!(curve.steps, vec![12.0, 4.0, 0.0]);
        let oracle = brute_force_steps(
            &f,
            &spec,
            &target,
            concat,
            &curve.order,
            Substitution::ForwardFill,
        );
        assert_eq!(curve.steps, oracle);
    }

    #[test]
    fn cpd_and_cpp_basics() {
        let ts = noisy(30, 2, 1);
        let spec = WindowSpec::new(5, 2).unwrap();
        let f = WindowMlp::new(5, 2, 4, 2, 2);
        let target = ChangeTarget::new(10, 12, 1, 0.0);
        let mut map = AttributionMap::zeros(target, &spec, 2, "x");
        let mut r = rng::rng(3);
        map.values.mapv_inplace(|_| rng::symmetric(&mut r, 1.0));
        let (zero, steps) = cpd(&f, &ts, &spec, &map, 0, Substitution::ForwardFill).unwrap();
        assert_eq!((zero, steps.len()), (0.0, 0));
        let (full, steps) = cpd(&f, &ts, &spec, &map, 14, Substitution::ForwardFill).unwrap();
        let mut running = 0.0;
        for k in 0..=14 {
            let c = cpd(&f, &ts, &spec, &map, k, Substitution::ForwardFill)
                .unwrap()
                .0;
            assert!(c >= running);
            running = c;
        }
        assert_eq!(running, full);
        assert!(steps.iter().all(|&s| s >= 0.0));
        assert!(cpd(&f, &ts, &spec, &map, 15, Substitution::ForwardFill).is_err());
        let (p, _) = cpp(&f, &ts, &spec, &map, 14, Substitution::ForwardFill).unwrap();
        // removing every cell in either order ends at the same input
        assert!((p - full).abs() < 10.0 && p >= 0.0);
    }

    #[test]
    fn area_formula() {
        let ts = noisy(30, 2, 4);
        let spec = WindowSpec::new(5, 2).unwrap();
        let f = WindowMlp::new(5, 2, 4, 2, 5);
        let target = ChangeTarget::new(10, 11, 0, 0.0);
        let mut map = AttributionMap::zeros(target, &spec, 2, "x");
        let mut r = rng::rng(6);
        map.values.mapv_inplace(|_| rng::symmetric(&mut r, 1.0));
        let m = Substitution::ForwardFill;
        let c1 = cpd(&f, &ts, &spec, &map, 1, m).unwrap().0;
        assert!((aupd(&f, &ts, &spec, &map, 1, m).unwrap() - c1 / 2.0).abs() <= 1e-15);
        let k = 9;
        let direct: f64 = (1..=k)
            .map(|j| {
                cpd(&f, &ts, &spec, &map, j, m).unwrap().0
                    + cpd(&f, &ts, &spec, &map, j - 1, m).unwrap().0
            })
            .sum::<f64>()
            / (2.0 * k as f64);
        let a = aupd(&f, &ts, &spec, &map, k, m).unwrap();
        assert!((a - direct).abs() <= 1e-12);
        assert!(a <= cpd(&f, &ts, &spec, &map, k, m).unwrap().0);
        assert!(
            aupp(&f, &ts, &spec, &map, k, m).unwrap() <= cpp(&f, &ts, &spec, &map, k, m).unwrap().0
        );
        assert!(aupd(&f, &ts, &spec, &map, 0, m).is_err());
    }

    fn isolated_steps(
        f: &AffineScorer,
        spec: &WindowSpec,
        target: &ChangeTarget,
        concat: ArrayView2<'_, f64>,
    ) -> Array2<f64> {
        let g = wrapper_eval_concat(f, spec, target, concat).unwrap();
        Array2::from_shape_fn(concat.dim(), |(t, d)| {
            let x = substitute(concat, &[(t, d)], Substitution::Zero).unwrap();
            (&g - &wrapper_eval_concat(f, spec, target, x.view()).unwrap())
                .mapv(f64::abs)
                .sum()
        })
    }

    #[test]
    fn corr_sign_follows_construction() {
        let ts = noisy(30, 2, 7);
        let spec = WindowSpec::new(5, 2).unwrap();
        let f = AffineScorer::new(5, 2, 2, Link::IdentityScore, 8);
        let target = ChangeTarget::new(10, 11, 0, 0.0);
        let concat = target.concat_input(&ts, &spec);
        // with zero substitution an affine model's per-cell change does not depend on order
        let steps = isolated_steps(&f, &spec, &target, concat);
        let mut map = AttributionMap::zeros(target, &spec, 2, "x");
        map.values = steps.clone() * 3.0;
        let c = corr_metric(&f, &ts, &spec, &map, 4, Substitution::Zero)
            .unwrap()
            .unwrap();
        assert!((c - 1.0).abs() < 1e-12, "{c}");
        map.values = steps.mapv(|s| 1.0 / (s + 1e-3));
        let c = corr_metric(&f, &ts, &spec, &map, 4, Substitution::Zero)
            .unwrap()
            .unwrap();
        assert!(c < 0.0, "{c}");
        assert!(corr_metric(&f, &ts, &spec, &map, 7, Substitution::Zero).is_err());
    }

    #[test]
    fn corr_undefined_without_variance() {
        let ts = TimeSeries::unlabeled("c", Array2::from_elem((20, 2), 1.0)).unwrap();
        let spec = WindowSpec::new(5, 2).unwrap();
        let f = WindowMlp::new(5, 2, 3, 2, 1);
        let target = ChangeTarget::new(10, 11, 0, 0.0);
        let mut map = AttributionMap::zeros(target, &spec, 2, "x");
        map.values[[2, 1]] = 1.0;
        // constant input: every removal step is zero
        assert_eq!(
            corr_metric(&f, &ts, &spec, &map, 3, Substitution::ForwardFill).unwrap(),
            None
        );
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 3.0]), None);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
