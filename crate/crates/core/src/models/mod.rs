//! Built-in differentiable classifiers with hand-written gradients.
//!
//! Parameters are stored flat; each model documents its layout. Weights are
//! initialised uniformly in `[-1/sqrt(fan_in), 1/sqrt(fan_in))` from a
//! SplitMix64 stream (see [`crate::rng`]), drawn in layout order. Biases start
//! at zero.

mod affine;
mod checkpoint;
mod mlp;
mod recurrent;
mod train;

use ndarray::{Array1, ArrayView2};

pub use affine::{AffineScorer, Link};
pub use checkpoint::{Checkpoint, Model};
pub use mlp::WindowMlp;
pub use recurrent::RecurrentClassifier;
pub use train::{train_sgd, windows_from_series, TrainConfig, TrainReport};

use crate::error::Result;
use crate::rng;

/// Models whose parameters can be fitted by [`train_sgd`].
pub trait Trainable: crate::classifier::Classifier + Clone {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Cross-entropy loss of one labelled window and its parameter gradient
    /// (added into `grad`, same layout as [`Trainable::params`]).
    fn loss_and_grad(
        &self,
        window: ArrayView2<'_, f64>,
        label: usize,
        grad: &mut [f64],
    ) -> Result<f64>;
}

pub(crate) fn softmax(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = scores.mapv(|s| (s - max).exp());
    let z = exp.sum();
    exp / z
}

/// `d p_class / d scores` for a softmax output.
pub(crate) fn softmax_sensitivity(p: &Array1<f64>, class: usize) -> Array1<f64> {
    let pc = p[class];
    let mut ds = p.mapv(|pk| -pc * pk);
    ds[class] += pc;
    ds
}

/// `d CE / d scores` for a softmax output.
pub(crate) fn cross_entropy_sensitivity(p: &Array1<f64>, label: usize) -> (f64, Array1<f64>) {
    let loss = nll(p[label]);
    let mut ds = p.clone();
    ds[label] -= 1.0;
    (loss, ds)
}

/// `-ln p`, floored at `p = f64::MIN_POSITIVE`; NaN stays NaN.
pub(crate) fn nll(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    -p.max(f64::MIN_POSITIVE).ln()
}

pub(crate) fn init_uniform(out: &mut [f64], fan_in: usize, r: &mut rng::SplitMix64) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in out {
        *v = rng::symmetric(r, bound);
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use ndarray::Array2;

    use crate::classifier::Classifier;

    /// Max relative error between `grad` and central differences with step 1e-4,
    /// relative to the largest gradient magnitude.
    pub fn fd_rel_error<C: Classifier>(f: &C, x: &Array2<f64>, class: usize) -> f64 {
        let g = f.grad(x.view(), class).unwrap();
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        let scale = g.iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
        for idx in 0..x.len() {
            let (t, d) = (idx / x.ncols(), idx % x.ncols());
            let mut xp = x.clone();
            xp[[t, d]] += h;
            let mut xm = x.clone();
            xm[[t, d]] -= h;
            let fp = f.predict(xp.view()).unwrap()[class];
            let fm = f.predict(xm.view()).unwrap()[class];
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((fd - g[[t, d]]).abs() / scale);
        }
        worst
    }

    pub fn random_window(w: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = crate::rng::rng(seed);
        Array2::from_shape_fn((w, d), |_| crate::rng::symmetric(&mut r, 1.5))
    }
}
