//! Seeded synthetic benchmarks.
//!
//! Series `i` of a run draws from its own stream `stream_seed(seed, i)`, so
//! generation order does not matter and series can be produced in parallel.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};
use crate::series::TimeSeries;

/// Three-state HMM whose active state shifts the mean of GP-distributed
/// features and picks which feature drives the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchFeatureConfig {
    pub num_series: usize,
    pub seq_len: usize,
    /// Window size used downstream; recorded for provenance.
    pub window: usize,
    pub initial: [f64; 3],
    pub transition: [[f64; 3]; 3],
    pub rbf_gamma: f64,
    pub marginal_variance: f64,
    pub means: [[f64; 3]; 3],
    pub seed: u64,
}

impl Default for SwitchFeatureConfig {
    fn default() -> Self {
        Self {
            num_series: 100,
            seq_len: 100,
            window: 50,
            initial: [1.0 / 3.0; 3],
            transition: [[0.95, 0.02, 0.03], [0.02, 0.95, 0.03], [0.03, 0.02, 0.95]],
            rbf_gamma: 0.2,
            marginal_variance: 0.1,
            means: [[0.8, 0.5, 0.2], [0.0, 1.0, 0.0], [0.2, 0.2, 0.8]],
            seed: 0,
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| v.is_nan() || *v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "{what} must be a probability vector, got {p:?}"
        )));
    }
    Ok(())
}

impl SwitchFeatureConfig {
    pub fn validate(&self) -> Result<()> {
        check_distribution(&self.initial, "initial distribution")?;
        for row in &self.transition {
            check_distribution(row, "transition row")?;
        }
        if self.seq_len == 0 {
            return Err(Error::InvalidConfig("seq_len must be positive".into()));
        }
        if !(self.rbf_gamma > 0.0 && self.marginal_variance > 0.0) {
            return Err(Error::InvalidConfig(
                "kernel parameters must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Stationary distribution of the transition matrix, by power iteration.
    pub fn stationary(&self) -> [f64; 3] {
        let mut p = [1.0 / 3.0; 3];
        for _ in 0..10_000 {
            let mut next = [0.0; 3];
            for (i, pi) in p.iter().enumerate() {
                for (j, n) in next.iter_mut().enumerate() {
                    *n += pi * self.transition[i][j];
                }
            }
            p = next;
        }
        p
    }
}

/// Lower Cholesky factor of `var * exp(-gamma * (a - b)^2)` on `0..n`.
/// Retries once with `1e-8` diagonal jitter.
pub fn rbf_cholesky(n: usize, gamma: f64, variance: f64) -> Result<DMatrix<f64>> {
    let gram = DMatrix::from_fn(n, n, |a, b| {
        let d = a as f64 - b as f64;
        variance * (-gamma * d * d).exp()
    });
    if let Some(c) = Cholesky::new(gram.clone()) {
        return Ok(c.l());
    }
    let jittered = gram + DMatrix::identity(n, n) * 1e-8;
    Cholesky::new(jittered)
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

fn sample_categorical(r: &mut SplitMix64, p: &[f64]) -> usize {
    let u = rng::unit_f64(r);
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One Switch-Feature series plus its hidden state path.
#[derive(Debug, Clone)]
pub struct SwitchFeatureSample {
    pub series: TimeSeries,
    pub states: Vec<usize>,
}

fn switch_feature_one(
    cfg: &SwitchFeatureConfig,
    chol: &DMatrix<f64>,
    index: usize,
) -> Result<SwitchFeatureSample> {
    let mut r = rng::rng(rng::stream_seed(cfg.seed, index as u64));
    let n = cfg.seq_len;
    let mut states = Vec::with_capacity(n);
    let mut s = sample_categorical(&mut r, &cfg.initial);
    for _ in 0..n {
        states.push(s);
        s = sample_categorical(&mut r, &cfg.transition[s]);
    }
    let mut values = Array2::zeros((n, 3));
    for d in 0..3 {
        let z = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
        let gp = chol * z;
        for t in 0..n {
            values[[t, d]] = cfg.means[states[t]][d] + gp[t];
        }
    }
    let labels = (0..n)
        .map(|t| {
            let p = sigmoid(values[[t, states[t]]]);
            usize::from(rng::unit_f64(&mut r) < p)
        })
        .collect();
    let names = vec!["f0".into(), "f1".into(), "f2".into()];
    let series = TimeSeries::new(format!("switch-{index}"), names, values, labels)?;
    Ok(SwitchFeatureSample { series, states })
}

pub fn gen_switch_feature_with_states(
    cfg: &SwitchFeatureConfig,
) -> Result<Vec<SwitchFeatureSample>> {
    cfg.validate()?;
    let chol = rbf_cholesky(cfg.seq_len, cfg.rbf_gamma, cfg.marginal_variance)?;
    (0..cfg.num_series)
        .into_par_iter()
        .map(|i| switch_feature_one(cfg, &chol, i))
        .collect()
}

pub fn gen_switch_feature(cfg: &SwitchFeatureConfig) -> Result<Vec<TimeSeries>> {
    Ok(gen_switch_feature_with_states(cfg)?
        .into_iter()
        .map(|s| s.series)
        .collect())
}

/// NARMA-2 base signals with linear trends and random spikes. The label
/// switches to 1 two steps after the first spike in feature 0 and stays there.
///
/// Base recurrence per feature, with `u_t ~ U[0, input_max)`:
/// `y_{t+1} = a y_t + b y_t (y_t + y_{t-1}) + c u_{t-1} u_t + e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedSpikeConfig {
    pub num_series: usize,
    pub seq_len: usize,
    pub num_features: usize,
    pub spike_probability: f64,
    pub spike_magnitude: f64,
    /// `(a, b, c, e)` of the recurrence.
    pub narma_coefficients: [f64; 4],
    pub input_max: f64,
    /// Per-feature trend slopes are drawn uniformly from `[-max, max)`.
    pub trend_slope_max: f64,
    pub label_delay: usize,
    pub seed: u64,
}

impl Default for DelayedSpikeConfig {
    fn default() -> Self {
        Self {
            num_series: 100,
            seq_len: 100,
            num_features: 3,
            spike_probability: 0.02,
            spike_magnitude: 2.0,
            narma_coefficients: [0.3, 0.05, 1.5, 0.1],
            input_max: 0.5,
            trend_slope_max: 0.01,
            label_delay: 2,
            seed: 0,
        }
    }
}

impl DelayedSpikeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_features == 0 || self.seq_len < 2 {
            return Err(Error::InvalidConfig(
                "need at least one feature and two steps".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.spike_probability) {
            return Err(Error::InvalidConfig(
                "spike_probability must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Labels from the feature-0 spike mask: 1 from `first spike + delay` on.
pub fn delayed_spike_labels(spikes: &[bool], delay: usize) -> Vec<usize> {
    let onset = spikes.iter().position(|&s| s).map(|t| t + delay);
    (0..spikes.len())
        .map(|t| usize::from(onset.is_some_and(|o| t >= o)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DelayedSpikeSample {
    pub series: TimeSeries,
    /// `spikes[t][d]`.
    pub spikes: Vec<Vec<bool>>,
}

fn delayed_spike_one(cfg: &DelayedSpikeConfig, index: usize) -> Result<DelayedSpikeSample> {
    let mut r = rng::rng(rng::stream_seed(cfg.seed, index as u64));
    let (n, dims) = (cfg.seq_len, cfg.num_features);
    let [a, b, c, e] = cfg.narma_coefficients;
    let mut values = Array2::zeros((n, dims));
    let mut spikes = vec![vec![false; dims]; n];
    for d in 0..dims {
        let u: Vec<f64> = (0..n)
            .map(|_| rng::unit_f64(&mut r) * cfg.input_max)
            .collect();
        let slope = rng::symmetric(&mut r, cfg.trend_slope_max);
        let mut y = vec![0.0; n];
        for t in 1..n - 1 {
            y[t + 1] = a * y[t] + b * y[t] * (y[t] + y[t - 1]) + c * u[t - 1] * u[t] + e;
        }
        for t in 0..n {
            let spike = rng::unit_f64(&mut r) < cfg.spike_probability;
            spikes[t][d] = spike;
            values[[t, d]] =
                y[t] + slope * t as f64 + if spike { cfg.spike_magnitude } else { 0.0 };
        }
    }
    let f0: Vec<bool> = spikes.iter().map(|row| row[0]).collect();
    let labels = delayed_spike_labels(&f0, cfg.label_delay);
    let names = (0..dims).map(|d| format!("f{d}")).collect();
    let series = TimeSeries::new(format!("spike-{index}"), names, values, labels)?;
    Ok(DelayedSpikeSample { series, spikes })
}

pub fn gen_delayed_spike_with_spikes(cfg: &DelayedSpikeConfig) -> Result<Vec<DelayedSpikeSample>> {
    cfg.validate()?;
    (0..cfg.num_series)
        .into_par_iter()
        .map(|i| delayed_spike_one(cfg, i))
        .collect()
}

pub fn gen_delayed_spike(cfg: &DelayedSpikeConfig) -> Result<Vec<TimeSeries>> {
    Ok(gen_delayed_spike_with_spikes(cfg)?
        .into_iter()
        .map(|s| s.series)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n` cut by `(train, val, test)` ratios; rounding
/// leftovers go to the test split.
pub fn make_splits(n: usize, ratios: [f64; 3], seed: u64) -> Result<Splits> {
    if ratios.iter().any(|r| r.is_nan() || *r < 0.0)
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidConfig(format!(
            "split ratios must sum to 1, got {ratios:?}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng(seed));
    let n_train = (ratios[0] * n as f64).floor() as usize;
    let n_val = ((ratios[1] * n as f64).floor() as usize).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Splits {
        train: idx,
        val,
        test,
    })
}
