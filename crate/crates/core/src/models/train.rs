use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{nll, Trainable};
use crate::error::{Error, Result};
use crate::rng;
use crate::series::{extract_window, TimeSeries, WindowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 20,
            batch_size: 32,
            seed: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return Err(Error::InvalidConfig("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training cross-entropy before training, then after every epoch.
    pub loss_trace: Vec<f64>,
}

fn dataset_loss<M: Trainable>(model: &M, data: &[(Array2<f64>, usize)]) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in data {
        let p = model.predict(x.view())?;
        total += nll(p[*y]);
    }
    Ok(total / data.len() as f64)
}

/// Minibatch SGD on mean cross-entropy plus `l2/2 * |params|^2`.
///
/// Each epoch visits the data in an order drawn from stream `epoch` of
/// `cfg.seed`; runs are bit-reproducible.
pub fn train_sgd<M: Trainable>(
    mut model: M,
    data: &[(Array2<f64>, usize)],
    cfg: &TrainConfig,
) -> Result<(M, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (x, _) in data {
        model.check_window(x.view())?;
    }
    let n_params = model.params().len();
    let mut grad = vec![0.0; n_params];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_trace = vec![dataset_loss(&model, data)?];

    for epoch in 0..cfg.epochs {
        let mut r = rng::rng(rng::stream_seed(cfg.seed, epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut r);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                let (x, y) = &data[i];
                batch_loss += model.loss_and_grad(x.view(), *y, &mut grad)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    loss: batch_loss,
                });
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= scale * g + cfg.learning_rate * cfg.l2 * *p;
            }
        }
        let loss = dataset_loss(&model, data)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        loss_trace.push(loss);
    }
    Ok((model, TrainReport { loss_trace }))
}

/// All stride-1 windows of every series, labelled with the label at the
/// window's last row.
pub fn windows_from_series(
    series: &[TimeSeries],
    spec: &WindowSpec,
) -> Result<Vec<(Array2<f64>, usize)>> {
    let mut out = Vec::new();
    for ts in series {
        for end in spec.window_size - 1..ts.len() {
            out.push((extract_window(ts, spec, end)?, ts.labels[end]));
        }
    }
    Ok(out)
}
