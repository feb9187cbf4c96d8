//! The differentiable classifier contract and the prediction-change wrapper.
//!
//! The wrapper maps the concatenated input `X[t1 - W + 1 ..= t2]` to
//! `f(window at t2) - f(window at t1)`, so any single-output explainer can be
//! pointed at a prediction change.

use ndarray::{Array1, Array2, ArrayView2};

use crate::attribution::ChangeTarget;
use crate::error::{Error, Result};
use crate::series::{extract_window, TimeSeries, WindowSpec};

/// A window classifier with exact input gradients.
///
/// Implementations must be pure: the same window gives bit-identical output.
pub trait Classifier: Send + Sync {
    /// `(W, D)` expected by `predict` and `grad`.
    fn input_shape(&self) -> (usize, usize);

    fn num_classes(&self) -> usize;

    /// Class probabilities for one `W x D` window.
    fn predict(&self, window: ArrayView2<'_, f64>) -> Result<Array1<f64>>;

    /// `d f_class / d window`, shape `W x D`.
    fn grad(&self, window: ArrayView2<'_, f64>, class: usize) -> Result<Array2<f64>>;

    /// False for score models whose outputs are not on the simplex.
    fn is_probabilistic(&self) -> bool {
        true
    }

    fn check_window(&self, window: ArrayView2<'_, f64>) -> Result<()> {
        let expected = self.input_shape();
        if window.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: window.dim(),
            });
        }
        Ok(())
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn input_shape(&self) -> (usize, usize) {
        (**self).input_shape()
    }
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn predict(&self, window: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        (**self).predict(window)
    }
    fn grad(&self, window: ArrayView2<'_, f64>, class: usize) -> Result<Array2<f64>> {
        (**self).grad(window, class)
    }
    fn is_probabilistic(&self) -> bool {
        (**self).is_probabilistic()
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn input_shape(&self) -> (usize, usize) {
        (**self).input_shape()
    }
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn predict(&self, window: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        (**self).predict(window)
    }
    fn grad(&self, window: ArrayView2<'_, f64>, class: usize) -> Result<Array2<f64>> {
        (**self).grad(window, class)
    }
    fn is_probabilistic(&self) -> bool {
        (**self).is_probabilistic()
    }
}

/// `f(window2) - f(window1)`.
pub fn wrapper_eval_perturbed<C: Classifier + ?Sized>(
    f: &C,
    window1: ArrayView2<'_, f64>,
    window2: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    f.check_window(window1)?;
    f.check_window(window2)?;
    Ok(f.predict(window2)? - f.predict(window1)?)
}

/// `g(X[t1 - W + 1 ..= t2]) = f(X at t2) - f(X at t1)`.
pub fn wrapper_eval<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    t1: usize,
    t2: usize,
) -> Result<Array1<f64>> {
    let w1 = extract_window(series, spec, t1)?;
    let w2 = extract_window(series, spec, t2)?;
    wrapper_eval_perturbed(f, w1.view(), w2.view())
}

/// Wrapper output on an explicit concatenated input laid out as in
/// [`ChangeTarget::concat_input`].
pub fn wrapper_eval_concat<C: Classifier + ?Sized>(
    f: &C,
    spec: &WindowSpec,
    target: &ChangeTarget,
    concat: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    let w = spec.window_size;
    let (o1, o2) = target.window_offsets(spec);
    let w1 = concat.slice(ndarray::s![o1..o1 + w, ..]);
    let w2 = concat.slice(ndarray::s![o2..o2 + w, ..]);
    wrapper_eval_perturbed(f, w1, w2)
}

/// Class with the largest increase from `p1` to `p2`; ties go to the lowest index.
pub fn argmax_increase(p1: &Array1<f64>, p2: &Array1<f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, (a, b)) in p1.iter().zip(p2.iter()).enumerate() {
        let inc = b - a;
        if inc > best.1 {
            best = (c, inc);
        }
    }
    best
}

pub fn select_target_class<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    t1: usize,
    t2: usize,
) -> Result<ChangeTarget> {
    if t1 >= t2 {
        return Err(Error::InvalidTarget {
            t1,
            t2,
            reason: "forward targets need t1 < t2".into(),
        });
    }
    ChangeTarget::new(t1, t2, 0, 0.0).check_indices(spec, series.len(), 0)?;
    let p1 = f.predict(extract_window(series, spec, t1)?.view())?;
    let p2 = f.predict(extract_window(series, spec, t2)?.view())?;
    let (class, delta) = argmax_increase(&p1, &p2);
    Ok(ChangeTarget::new(t1, t2, class, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_increasing_class() {
        let (c, d) = argmax_increase(&array![0.9, 0.1], &array![0.5, 0.5]);
        assert_eq!(c, 1);
        assert!((d - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_change_picks_class_zero() {
        let p = array![0.3, 0.7];
        assert_eq!(argmax_increase(&p, &p), (0, 0.0));
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        // exact tie: increases (0.25, -0.5, 0.25)
        let p1 = array![0.25, 0.5, 0.25];
        let p2 = array![0.5, 0.0, 0.5];
        assert_eq!(argmax_increase(&p1, &p2).0, 0);
    }

    #[test]
    fn three_class_near_tie() {
        let (c, d) = argmax_increase(&array![0.2, 0.5, 0.3], &array![0.4, 0.1, 0.5]);
        // increases (0.2, -0.4, 0.2): tie between 0 and 2 resolves to 0
        assert_eq!(c, 0);
        assert!((d - 0.2).abs() < 1e-12);
    }
}
