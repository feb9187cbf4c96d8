//! Attribution of prediction changes in online time-series classifiers.
//!
//! A classifier `f` slides a window of `W` rows over a series. Given two
//! times `t1 < t2`, the wrapper `g = f(window at t2) - f(window at t1)` turns
//! the prediction change into a single output over the concatenated rows
//! `t1 - W + 1 ..= t2`; attributors explain `g`, and the metric suite scores
//! those explanations by sequential removal.
//!
//! Indices are 0-based throughout; see [`series`] for the window convention.

pub mod attribution;
pub mod baselines;
pub mod classifier;
pub mod datagen;
pub mod error;
mod matrix_serde;
pub mod methods;
pub mod metrics;
pub mod models;
pub mod paths;
pub mod rng;
pub mod series;

pub use attribution::{AttributionMap, AttributionParams, ChangeTarget};
pub use classifier::{
    argmax_increase, select_target_class, wrapper_eval, wrapper_eval_concat,
    wrapper_eval_perturbed, Classifier,
};
pub use error::{Error, Result};
pub use methods::{Attributor, Method, MethodConfig};
pub use metrics::{MetricReport, Substitution};
pub use series::{extract_window, TimeSeries, WindowSpec};
