use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{cross_entropy_sensitivity, init_uniform, softmax, softmax_sensitivity, Trainable};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    Softmax,
    /// Raw affine scores. Not a probability model; only useful as an
    /// exactness oracle because every path integral over it is closed-form.
    IdentityScore,
}

/// `score_c = sum_{t,d} w[t,d,c] x[t,d] + b_c`.
///
/// Layout: `w` in `(t, d, c)` row-major order, then `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineScorer {
    window: usize,
    features: usize,
    classes: usize,
    link: Link,
    params: Vec<f64>,
}

impl AffineScorer {
    pub fn new(window: usize, features: usize, classes: usize, link: Link, seed: u64) -> Self {
        let mut params = vec![0.0; window * features * classes + classes];
        let mut r = rng::rng(seed);
        init_uniform(
            &mut params[..window * features * classes],
            window * features,
            &mut r,
        );
        Self {
            window,
            features,
            classes,
            link,
            params,
        }
    }

    pub fn from_parts(
        weights: &ndarray::Array3<f64>,
        bias: &Array1<f64>,
        link: Link,
    ) -> Result<Self> {
        let (window, features, classes) = weights.dim();
        if bias.len() != classes {
            return Err(Error::ShapeMismatch {
                expected: (classes, 1),
                actual: (bias.len(), 1),
            });
        }
        let mut params: Vec<f64> = weights.iter().copied().collect();
        params.extend(bias.iter());
        Ok(Self {
            window,
            features,
            classes,
            link,
            params,
        })
    }

    pub(crate) fn from_flat(
        window: usize,
        features: usize,
        classes: usize,
        link: Link,
        params: Vec<f64>,
    ) -> Result<Self> {
        let expected = window * features * classes + classes;
        if params.len() != expected {
            return Err(Error::Schema(format!(
                "affine model needs {expected} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            window,
            features,
            classes,
            link,
            params,
        })
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn weight(&self, t: usize, d: usize, c: usize) -> f64 {
        self.params[(t * self.features + d) * self.classes + c]
    }

    /// `w[.., .., class]` as a `W x D` matrix.
    pub fn class_weights(&self, class: usize) -> Array2<f64> {
        Array2::from_shape_fn((self.window, self.features), |(t, d)| {
            self.weight(t, d, class)
        })
    }

    fn bias(&self) -> &[f64] {
        &self.params[self.window * self.features * self.classes..]
    }

    fn scores(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut s = Array1::from(self.bias().to_vec());
        for ((t, d), &v) in x.indexed_iter() {
            let base = (t * self.features + d) * self.classes;
            for c in 0..self.classes {
                s[c] += self.params[base + c] * v;
            }
        }
        s
    }

    /// Backpropagate output sensitivity `ds` to the input.
    fn input_grad(&self, ds: &Array1<f64>) -> Array2<f64> {
        Array2::from_shape_fn((self.window, self.features), |(t, d)| {
            (0..self.classes)
                .map(|c| self.weight(t, d, c) * ds[c])
                .sum()
        })
    }
}

impl Classifier for AffineScorer {
    fn input_shape(&self) -> (usize, usize) {
        (self.window, self.features)
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn predict(&self, window: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_window(window)?;
        let s = self.scores(window);
        Ok(match self.link {
            Link::Softmax => softmax(&s),
            Link::IdentityScore => s,
        })
    }

    fn grad(&self, window: ArrayView2<'_, f64>, class: usize) -> Result<Array2<f64>> {
        self.check_window(window)?;
        match self.link {
            Link::IdentityScore => Ok(self.class_weights(class)),
            Link::Softmax => {
                let p = softmax(&self.scores(window));
                Ok(self.input_grad(&softmax_sensitivity(&p, class)))
            }
        }
    }

    fn is_probabilistic(&self) -> bool {
        self.link == Link::Softmax
    }
}

impl Trainable for AffineScorer {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn loss_and_grad(
        &self,
        window: ArrayView2<'_, f64>,
        label: usize,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_window(window)?;
        if self.link != Link::Softmax {
            return Err(Error::InvalidConfig(
                "identity-score models cannot be trained".into(),
            ));
        }
        let p = softmax(&self.scores(window));
        let (loss, ds) = cross_entropy_sensitivity(&p, label);
        for ((t, d), &v) in window.indexed_iter() {
            let base = (t * self.features + d) * self.classes;
            for c in 0..self.classes {
                grad[base + c] += v * ds[c];
            }
        }
        let off = self.window * self.features * self.classes;
        for c in 0..self.classes {
            grad[off + c] += ds[c];
        }
        Ok(loss)
    }
}
