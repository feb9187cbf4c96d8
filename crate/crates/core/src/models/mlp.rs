use ndarray::{Array1, Array2, ArrayView2};

use super::{cross_entropy_sensitivity, init_uniform, softmax, softmax_sensitivity, Trainable};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng;

/// One tanh hidden layer over the flattened window, softmax head.
///
/// Layout: input weights `(W*D) x H` row-major, hidden bias `H`, output
/// weights `H x C` row-major, output bias `C`. The flattened input index of
/// `x[t, d]` is `t * D + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMlp {
    window: usize,
    features: usize,
    hidden: usize,
    classes: usize,
    params: Vec<f64>,
}

struct Forward {
    hidden: Vec<f64>,
    probs: Array1<f64>,
}

impl WindowMlp {
    pub fn new(window: usize, features: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let n_in = window * features;
        let mut m = Self {
            window,
            features,
            hidden,
            classes,
            params: vec![0.0; Self::param_count(n_in, hidden, classes)],
        };
        let mut r = rng::rng(seed);
        let (wi, _, wo, _) = m.offsets();
        init_uniform(&mut m.params[wi..wi + n_in * hidden], n_in, &mut r);
        init_uniform(&mut m.params[wo..wo + hidden * classes], hidden, &mut r);
        m
    }

    fn param_count(n_in: usize, hidden: usize, classes: usize) -> usize {
        n_in * hidden + hidden + hidden * classes + classes
    }

    pub(crate) fn from_flat(
        window: usize,
        features: usize,
        hidden: usize,
        classes: usize,
        params: Vec<f64>,
    ) -> Result<Self> {
        let expected = Self::param_count(window * features, hidden, classes);
        if params.len() != expected {
            return Err(Error::Schema(format!(
                "mlp needs {expected} parameters, got {}",
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

    pub fn hidden_width(&self) -> usize {
        self.hidden
    }

    fn offsets(&self) -> (usize, usize, usize, usize) {
        let wi = 0;
        let bh = wi + self.window * self.features * self.hidden;
        let wo = bh + self.hidden;
        let bo = wo + self.hidden * self.classes;
        (wi, bh, wo, bo)
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Forward {
        let (wi, bh, wo, bo) = self.offsets();
        let h_n = self.hidden;
        let mut a = self.params[bh..bh + h_n].to_vec();
        for ((t, d), &v) in x.indexed_iter() {
            let row = wi + (t * self.features + d) * h_n;
            for (j, aj) in a.iter_mut().enumerate() {
                *aj += v * self.params[row + j];
            }
        }
        let hidden: Vec<f64> = a.iter().map(|v| v.tanh()).collect();
        let mut s = Array1::from(self.params[bo..bo + self.classes].to_vec());
        for (j, hj) in hidden.iter().enumerate() {
            for c in 0..self.classes {
                s[c] += hj * self.params[wo + j * self.classes + c];
            }
        }
        Forward {
            hidden,
            probs: softmax(&s),
        }
    }

    /// Hidden pre-activation sensitivity for output sensitivity `ds`.
    fn hidden_delta(&self, fwd: &Forward, ds: &Array1<f64>) -> Vec<f64> {
        let (_, _, wo, _) = self.offsets();
        fwd.hidden
            .iter()
            .enumerate()
            .map(|(j, hj)| {
                let dh: f64 = (0..self.classes)
                    .map(|c| self.params[wo + j * self.classes + c] * ds[c])
                    .sum();
                dh * (1.0 - hj * hj)
            })
            .collect()
    }

    /// A copy whose hidden unit `i` is this model's unit `perm[i]`.
    pub fn permute_hidden_units(&self, perm: &[usize]) -> Result<Self> {
        let h_n = self.hidden;
        if perm.len() != h_n {
            return Err(Error::InvalidPermutation(format!(
                "length {} for {h_n} hidden units",
                perm.len()
            )));
        }
        let mut seen = vec![false; h_n];
        for &p in perm {
            if p >= h_n || seen[p] {
                return Err(Error::InvalidPermutation(format!(
                    "{perm:?} is not a bijection"
                )));
            }
            seen[p] = true;
        }
        let (wi, bh, wo, _) = self.offsets();
        let mut out = self.clone();
        let n_in = self.window * self.features;
        for (i, &src) in perm.iter().enumerate() {
            for k in 0..n_in {
                out.params[wi + k * h_n + i] = self.params[wi + k * h_n + src];
            }
            out.params[bh + i] = self.params[bh + src];
            for c in 0..self.classes {
                out.params[wo + i * self.classes + c] = self.params[wo + src * self.classes + c];
            }
        }
        Ok(out)
    }
}

impl Classifier for WindowMlp {
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
        let fwd = self.forward(window);
        let da = self.hidden_delta(&fwd, &softmax_sensitivity(&fwd.probs, class));
        let (wi, _, _, _) = self.offsets();
        let h_n = self.hidden;
        Ok(Array2::from_shape_fn(
            (self.window, self.features),
            |(t, d)| {
                let row = wi + (t * self.features + d) * h_n;
                da.iter()
                    .enumerate()
                    .map(|(j, g)| g * self.params[row + j])
                    .sum()
            },
        ))
    }
}

impl Trainable for WindowMlp {
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
        let fwd = self.forward(window);
        let (loss, ds) = cross_entropy_sensitivity(&fwd.probs, label);
        let da = self.hidden_delta(&fwd, &ds);
        let (wi, bh, wo, bo) = self.offsets();
        let h_n = self.hidden;
        for ((t, d), &v) in window.indexed_iter() {
            let row = wi + (t * self.features + d) * h_n;
            for (j, g) in da.iter().enumerate() {
                grad[row + j] += v * g;
            }
        }
        for (j, g) in da.iter().enumerate() {
            grad[bh + j] += g;
            for c in 0..self.classes {
                grad[wo + j * self.classes + c] += fwd.hidden[j] * ds[c];
            }
        }
        for c in 0..self.classes {
            grad[bo + c] += ds[c];
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::{fd_rel_error, random_window};

    #[test]
    fn simplex_output() {
        let m = WindowMlp::new(6, 3, 5, 3, 2);
        for seed in 0..10 {
            let p = m.predict(random_window(6, 3, seed).view()).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = WindowMlp::new(6, 3, 5, 2, 3);
        for seed in 0..5 {
            let x = random_window(6, 3, 100 + seed);
            assert!(fd_rel_error(&m, &x, (seed % 2) as usize) < 1e-4);
        }
    }

    #[test]
    fn identity_permutation_keeps_parameters() {
        let m = WindowMlp::new(4, 2, 6, 2, 8);
        let p = m.permute_hidden_units(&[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn permutation_preserves_function() {
        let m = WindowMlp::new(4, 2, 6, 2, 8);
        let p = m.permute_hidden_units(&[3, 5, 0, 1, 4, 2]).unwrap();
        assert_ne!(p.params, m.params);
        for seed in 0..100 {
            let x = random_window(4, 2, seed);
            let a = m.predict(x.view()).unwrap();
            let b = p.predict(x.view()).unwrap();
            assert!((&a - &b).iter().all(|v| v.abs() <= 1e-12));
            let ga = m.grad(x.view(), 1).unwrap();
            let gb = p.grad(x.view(), 1).unwrap();
            assert!((&ga - &gb).iter().all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn rejects_non_bijection() {
        let m = WindowMlp::new(4, 2, 3, 2, 8);
        assert!(m.permute_hidden_units(&[0, 0, 1]).is_err());
        assert!(m.permute_hidden_units(&[0, 1]).is_err());
        assert!(m.permute_hidden_units(&[0, 1, 3]).is_err());
    }
}
