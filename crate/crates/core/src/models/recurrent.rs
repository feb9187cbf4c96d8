use ndarray::{Array1, Array2, ArrayView2};

use super::{cross_entropy_sensitivity, init_uniform, softmax, softmax_sensitivity, Trainable};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng;

/// Single-gate tanh recurrent cell read out through a softmax head:
///
/// ```text
/// h_0 = 0
/// h_t = tanh(x_t U + h_{t-1} V + b)
/// p   = softmax(h_W R + c)
/// ```
///
/// Gradients are exact backpropagation through all `W` steps.
///
/// Layout: `U` (`D x H`), `V` (`H x H`), `b` (`H`), `R` (`H x C`), `c` (`C`),
/// all row-major. Fan-in for initialisation is `D` for `U` and `H` for `V`, `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentClassifier {
    window: usize,
    features: usize,
    hidden: usize,
    classes: usize,
    params: Vec<f64>,
}

struct Trace {
    /// `h_0 ..= h_W`, each of length H.
    states: Vec<f64>,
    probs: Array1<f64>,
}

struct Offsets {
    u: usize,
    v: usize,
    b: usize,
    r: usize,
    c: usize,
}

impl RecurrentClassifier {
    pub fn new(window: usize, features: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut m = Self {
            window,
            features,
            hidden,
            classes,
            params: vec![0.0; Self::param_count(features, hidden, classes)],
        };
        let o = m.offsets();
        let mut r = rng::rng(seed);
        init_uniform(&mut m.params[o.u..o.v], features, &mut r);
        init_uniform(&mut m.params[o.v..o.b], hidden, &mut r);
        init_uniform(&mut m.params[o.r..o.c], hidden, &mut r);
        m
    }

    fn param_count(features: usize, hidden: usize, classes: usize) -> usize {
        features * hidden + hidden * hidden + hidden + hidden * classes + classes
    }

    pub(crate) fn from_flat(
        window: usize,
        features: usize,
        hidden: usize,
        classes: usize,
        params: Vec<f64>,
    ) -> Result<Self> {
        let expected = Self::param_count(features, hidden, classes);
        if params.len() != expected {
            return Err(Error::Schema(format!(
                "recurrent model needs {expected} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            window,
            features,
            hidden,
            classes,
            params,
        })
    }

    pub fn state_width(&self) -> usize {
        self.hidden
    }

    fn offsets(&self) -> Offsets {
        let (d, h, c) = (self.features, self.hidden, self.classes);
        let u = 0;
        let v = u + d * h;
        let b = v + h * h;
        let r = b + h;
        let cc = r + h * c;
        Offsets { u, v, b, r, c: cc }
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Trace {
        let (d_n, h_n) = (self.features, self.hidden);
        let o = self.offsets();
        let p = &self.params;
        let mut states = vec![0.0; (self.window + 1) * h_n];
        for t in 0..self.window {
            let (prev, next) = states.split_at_mut((t + 1) * h_n);
            let prev = &prev[t * h_n..];
            let next = &mut next[..h_n];
            next.copy_from_slice(&p[o.b..o.b + h_n]);
            for d in 0..d_n {
                let xv = x[[t, d]];
                let row = &p[o.u + d * h_n..o.u + (d + 1) * h_n];
                for (a, w) in next.iter_mut().zip(row) {
                    *a += xv * w;
                }
            }
            for (i, &hv) in prev.iter().enumerate() {
                let row = &p[o.v + i * h_n..o.v + (i + 1) * h_n];
                for (a, w) in next.iter_mut().zip(row) {
                    *a += hv * w;
                }
            }
            for a in next.iter_mut() {
                *a = a.tanh();
            }
        }
        let last = &states[self.window * h_n..];
        let mut s = Array1::from(p[o.c..o.c + self.classes].to_vec());
        for (j, hj) in last.iter().enumerate() {
            for c in 0..self.classes {
                s[c] += hj * p[o.r + j * self.classes + c];
            }
        }
        let probs = softmax(&s);
        Trace { states, probs }
    }

    /// Backpropagate output sensitivity `ds` through time. Returns the input
    /// gradient; accumulates parameter gradients into `param_grad` if given.
    fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        trace: &Trace,
        ds: &Array1<f64>,
        mut param_grad: Option<&mut [f64]>,
    ) -> Array2<f64> {
        let (d_n, h_n, c_n) = (self.features, self.hidden, self.classes);
        let o = self.offsets();
        let p = &self.params;
        let last = &trace.states[self.window * h_n..];
        let mut dh: Vec<f64> = (0..h_n)
            .map(|j| (0..c_n).map(|c| p[o.r + j * c_n + c] * ds[c]).sum())
            .collect();
        if let Some(g) = param_grad.as_deref_mut() {
            for j in 0..h_n {
                for c in 0..c_n {
                    g[o.r + j * c_n + c] += last[j] * ds[c];
                }
            }
            for c in 0..c_n {
                g[o.c + c] += ds[c];
            }
        }
        let mut gx = Array2::zeros((self.window, d_n));
        let mut da = vec![0.0; h_n];
        for t in (0..self.window).rev() {
            let h_t = &trace.states[(t + 1) * h_n..(t + 2) * h_n];
            let h_prev = &trace.states[t * h_n..(t + 1) * h_n];
            for j in 0..h_n {
                da[j] = dh[j] * (1.0 - h_t[j] * h_t[j]);
            }
            for d in 0..d_n {
                let row = &p[o.u + d * h_n..o.u + (d + 1) * h_n];
                gx[[t, d]] = row.iter().zip(&da).map(|(w, g)| w * g).sum();
            }
            if let Some(g) = param_grad.as_deref_mut() {
                for d in 0..d_n {
                    let xv = x[[t, d]];
                    for j in 0..h_n {
                        g[o.u + d * h_n + j] += xv * da[j];
                    }
                }
                for i in 0..h_n {
                    for j in 0..h_n {
                        g[o.v + i * h_n + j] += h_prev[i] * da[j];
                    }
                }
                for j in 0..h_n {
                    g[o.b + j] += da[j];
                }
            }
            for (i, dhi) in dh.iter_mut().enumerate() {
                let row = &p[o.v + i * h_n..o.v + (i + 1) * h_n];
                *dhi = row.iter().zip(&da).map(|(w, g)| w * g).sum();
            }
        }
        gx
    }
}

impl Classifier for RecurrentClassifier {
    fn input_shape(&self) -> (usize, usize) {
        (self.window, self.features)
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn predict(&self, window: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_window(window)?;
        Ok(self.forward(window).probs)
    }

    fn grad(&self, window: ArrayView2<'_, f64>, class: usize) -> Result<Array2<f64>> {
        self.check_window(window)?;
        let trace = self.forward(window);
        let ds = softmax_sensitivity(&trace.probs, class);
        Ok(self.backward(window, &trace, &ds, None))
    }
}

impl Trainable for RecurrentClassifier {
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
        let trace = self.forward(window);
        let (loss, ds) = cross_entropy_sensitivity(&trace.probs, label);
        self.backward(window, &trace, &ds, Some(grad));
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::{fd_rel_error, random_window};

    #[test]
    fn input_gradient_matches_finite_differences() {
        let m = RecurrentClassifier::new(8, 3, 4, 2, 21);
        for seed in 0..5 {
            let x = random_window(8, 3, 40 + seed);
            let err = fd_rel_error(&m, &x, (seed % 2) as usize);
            assert!(err < 1e-4, "relative error {err}");
        }
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let m = RecurrentClassifier::new(5, 2, 3, 3, 4);
        let x = random_window(5, 2, 9);
        let mut g = vec![0.0; m.params().len()];
        m.loss_and_grad(x.view(), 2, &mut g).unwrap();
        let h = 1e-5;
        for k in 0..m.params().len() {
            let mut mp = m.clone();
            mp.params_mut()[k] += h;
            let mut mm = m.clone();
            mm.params_mut()[k] -= h;
            let mut scratch = vec![0.0; g.len()];
            let lp = mp.loss_and_grad(x.view(), 2, &mut scratch).unwrap();
            let lm = mm.loss_and_grad(x.view(), 2, &mut scratch).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "param {k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn pure_and_on_simplex() {
        let m = RecurrentClassifier::new(8, 3, 4, 3, 1);
        let x = random_window(8, 3, 2);
        let a = m.predict(x.view()).unwrap();
        let b = m.predict(x.view()).unwrap();
        assert_eq!(a, b);
        assert!((a.sum() - 1.0).abs() < 1e-9);
        assert_eq!(m.grad(x.view(), 0).unwrap(), m.grad(x.view(), 0).unwrap());
    }
}
