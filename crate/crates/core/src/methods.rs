//! Attributors by name, with the parameters each one needs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attribution::{AttributionMap, ChangeTarget};
use crate::baselines::{occlusion_attribute, random_attribute};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::paths::{rbs_attribute, swing_attribute, zero_baseline_ig_change, IntegratorConfig};
use crate::rng;
use crate::series::{TimeSeries, WindowSpec};

/// Anything that explains a [`ChangeTarget`] with a map over its attribution range.
pub trait Attributor: Sync {
    fn name(&self) -> &str;

    /// Rows needed before the earliest window of a target.
    fn history(&self) -> usize {
        0
    }

    fn attribute(
        &self,
        f: &dyn Classifier,
        series: &TimeSeries,
        spec: &WindowSpec,
        target: &ChangeTarget,
    ) -> Result<AttributionMap>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Swing,
    Rbs,
    IgZero,
    Occlusion,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Swing,
        Method::Rbs,
        Method::IgZero,
        Method::Occlusion,
        Method::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Swing => "swing",
            Method::Rbs => "rbs",
            Method::IgZero => "ig-zero",
            Method::Occlusion => "occlusion",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// A [`Method`] with its integration grid, baseline offset and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub integrator: IntegratorConfig,
    pub offset: usize,
    pub seed: u64,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            integrator: IntegratorConfig::default(),
            offset: 1,
            seed: 0,
        }
    }
}

/// FNV-1a, used to give every series its own random stream.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Attributor for MethodConfig {
    fn name(&self) -> &str {
        self.method.name()
    }

    fn history(&self) -> usize {
        match self.method {
            Method::Swing | Method::Rbs => self.offset,
            _ => 0,
        }
    }

    fn attribute(
        &self,
        f: &dyn Classifier,
        series: &TimeSeries,
        spec: &WindowSpec,
        target: &ChangeTarget,
    ) -> Result<AttributionMap> {
        let cfg = &self.integrator;
        match self.method {
            Method::Swing => swing_attribute(f, series, spec, target, cfg, self.offset),
            Method::Rbs => rbs_attribute(f, series, spec, target, cfg, self.offset),
            Method::IgZero => zero_baseline_ig_change(f, series, spec, target, cfg),
            Method::Occlusion => occlusion_attribute(f, series, spec, target),
            Method::Random => {
                target.check_indices(spec, series.len(), 0)?;
                let stream = rng::stream_seed(self.seed, fnv1a(&series.series_id));
                let seed = rng::stream_seed(stream, ((target.t1 as u64) << 32) | target.t2 as u64);
                let mut map = random_attribute(target, spec, series.num_features(), seed);
                map.params.seed = Some(self.seed);
                Ok(map)
            }
        }
    }
}
