use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    corr_from_curves, macro_aggregate, removal_curve, MetricReport, Order, SampleScores,
    Substitution,
};
use crate::attribution::{AttributionMap, ChangeTarget};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::methods::Attributor;
use crate::series::{extract_window, TimeSeries, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Cells removed per sequence.
    pub k: usize,
    pub substitution: Substitution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            k: 50,
            substitution: Substitution::ForwardFill,
        }
    }
}

/// A target on series number `series`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRef {
    pub series: usize,
    pub target: ChangeTarget,
}

/// Single-step maps of one series, computed on demand.
struct StepCache<'a> {
    f: &'a dyn Classifier,
    series: &'a TimeSeries,
    spec: &'a WindowSpec,
    attributor: &'a dyn Attributor,
    first: usize,
    maps: BTreeMap<(usize, usize), AttributionMap>,
}

impl StepCache<'_> {
    /// Single-step maps of class `class` that can contribute to rows `lo ..= hi`.
    fn contributors(&mut self, class: usize, lo: usize, hi: usize) -> Result<Vec<AttributionMap>> {
        let w = self.spec.window_size;
        let from = lo.max(self.first);
        let to = (hi + w - 1).min(self.series.len() - 1);
        let mut out = Vec::new();
        for t in from..=to {
            if !self.maps.contains_key(&(class, t)) {
                let p = |end: usize| -> Result<f64> {
                    Ok(self
                        .f
                        .predict(extract_window(self.series, self.spec, end)?.view())?[class])
                };
                let target = ChangeTarget::new(t - 1, t, class, p(t)? - p(t - 1)?);
                let map = self
                    .attributor
                    .attribute(self.f, self.series, self.spec, &target)?;
                self.maps.insert((class, t), map);
            }
            out.push(self.maps[&(class, t)].clone());
        }
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn score_sample(
    f: &dyn Classifier,
    series: &TimeSeries,
    spec: &WindowSpec,
    attributor: &dyn Attributor,
    cache: &mut StepCache<'_>,
    sample: usize,
    target: &ChangeTarget,
    cfg: &SuiteConfig,
) -> Result<SampleScores> {
    let k = cfg.k;
    let raw = attributor.attribute(f, series, spec, target)?;
    raw.check_shape(spec, series.num_features())?;
    if 2 * k > raw.cells() {
        return Err(Error::KOutOfRange {
            k,
            cells: raw.cells(),
        });
    }
    let steps = cache.contributors(target.target_class, raw.start_time, raw.end_time())?;
    let agg = if steps.is_empty() {
        raw.clone()
    } else {
        macro_aggregate(&raw, &steps, spec)?
    };
    let concat = target.concat_input(series, spec);
    let curve = |scores: &AttributionMap, order| {
        removal_curve(
            f,
            spec,
            target,
            concat,
            scores.values.view(),
            order,
            k,
            cfg.substitution,
        )
    };
    let top = curve(&raw, Order::Descending)?;
    let bottom = curve(&raw, Order::Ascending)?;
    let mtop = curve(&agg, Order::Descending)?;
    let mbottom = curve(&agg, Order::Ascending)?;
    let area = |c: &super::RemovalCurve| if k == 0 { Ok(0.0) } else { c.area(k) };
    let corr = if k == 0 {
        None
    } else {
        corr_from_curves(raw.values.view(), &top, &bottom, k)?
    };
    Ok(SampleScores {
        sample,
        series_id: series.series_id.clone(),
        t1: target.t1,
        t2: target.t2,
        class: target.target_class,
        delta: target.delta,
        cpd: top.cumulative(k),
        aupd: area(&top)?,
        mpd: mtop.cumulative(k),
        aumpd: area(&mtop)?,
        cpp: bottom.cumulative(k),
        aupp: area(&bottom)?,
        mpp: mbottom.cumulative(k),
        aumpp: area(&mbottom)?,
        corr,
    })
}

/// Scores `attributor` on every sample with all nine metrics.
///
/// Series are processed in parallel; samples come back in input order and
/// every value is independent of the thread count. Macro variants average
/// single-step maps of the sample's class, computed with the same attributor.
pub fn evaluate_suite(
    f: &dyn Classifier,
    series: &[TimeSeries],
    samples: &[SampleRef],
    attributor: &dyn Attributor,
    spec: &WindowSpec,
    cfg: &SuiteConfig,
) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        if s.series >= series.len() {
            return Err(Error::InvalidConfig(format!(
                "sample {i} refers to series {} of {}",
                s.series,
                series.len()
            )));
        }
        groups.entry(s.series).or_default().push(i);
    }
    let groups: Vec<(usize, Vec<usize>)> = groups.into_iter().collect();
    let history = attributor.history().max(1);

    let scored: Vec<Vec<SampleScores>> = groups
        .par_iter()
        .map(|(si, idx)| {
            let ts = &series[*si];
            let mut cache = StepCache {
                f,
                series: ts,
                spec,
                attributor,
                first: spec.window_size + history,
                maps: BTreeMap::new(),
            };
            idx.iter()
                .map(|&i| {
                    let t = &samples[i].target;
                    let wrap = |e: Error| Error::Sample {
                        sample: format!("#{i} {}:{}->{}", ts.series_id, t.t1, t.t2),
                        source: Box::new(e),
                    };
                    score_sample(f, ts, spec, attributor, &mut cache, i, t, cfg).map_err(wrap)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut all: Vec<SampleScores> = scored.into_iter().flatten().collect();
    all.sort_by_key(|s| s.sample);
    Ok(MetricReport {
        method: attributor.name().to_string(),
        k: cfg.k,
        substitution: cfg.substitution,
        samples: all,
    })
}
