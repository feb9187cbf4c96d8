use changeattr::metrics::SampleRef;
use changeattr::{rng, select_target_class, Classifier, Error, TimeSeries, WindowSpec};
use rand::seq::SliceRandom;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetPlan {
    /// `t2 - t1`.
    pub gap: usize,
    /// Rows needed before the earliest window, as for [`changeattr::Attributor::history`].
    pub history: usize,
    pub per_series: usize,
    pub seed: u64,
}

/// Up to `per_series` forward targets `t -> t + gap` on each listed series.
///
/// Start times are drawn without replacement from
/// `W - 1 + max(history, 1) ..= L - 1 - gap` with stream `i` of `seed` for
/// series `i`, then sorted; each target explains the class with the largest
/// probability increase. Series too short for any target contribute none.
pub fn choose_targets(
    f: &dyn Classifier,
    series: &[TimeSeries],
    indices: &[usize],
    spec: &WindowSpec,
    plan: &TargetPlan,
) -> changeattr::Result<Vec<SampleRef>> {
    let TargetPlan {
        gap,
        history,
        per_series,
        seed,
    } = *plan;
    let w = spec.window_size;
    if gap == 0 || gap >= w {
        return Err(Error::InvalidConfig(format!(
            "gap must be in 1..{w}, got {gap}"
        )));
    }
    let lo = w - 1 + history.max(1);
    let per: Vec<Vec<SampleRef>> = indices
        .par_iter()
        .map(|&i| {
            let ts = series
                .get(i)
                .ok_or_else(|| Error::InvalidConfig(format!("series index {i} out of range")))?;
            if ts.len() < lo + gap + 1 {
                return Ok(Vec::new());
            }
            let mut starts: Vec<usize> = (lo..=ts.len() - 1 - gap).collect();
            starts.shuffle(&mut rng::rng(rng::stream_seed(seed, i as u64)));
            starts.truncate(per_series);
            starts.sort_unstable();
            starts
                .into_iter()
                .map(|t1| {
                    Ok(SampleRef {
                        series: i,
                        target: select_target_class(f, ts, spec, t1, t1 + gap)?,
                    })
                })
                .collect()
        })
        .collect::<changeattr::Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use changeattr::models::WindowMlp;
    use ndarray::Array2;

    fn data(n: usize, len: usize) -> Vec<TimeSeries> {
        (0..n)
            .map(|i| {
                let v = Array2::from_shape_fn((len, 2), |(t, d)| {
                    ((t * 7 + d * 3 + i) % 11) as f64 / 11.0
                });
                TimeSeries::unlabeled(format!("s{i}"), v).unwrap()
            })
            .collect()
    }

    fn plan(gap: usize, seed: u64) -> TargetPlan {
        TargetPlan {
            gap,
            history: 1,
            per_series: 4,
            seed,
        }
    }

    #[test]
    fn targets_are_valid_sorted_and_seeded() {
        let spec = WindowSpec::new(5, 2).unwrap();
        let f = WindowMlp::new(5, 2, 4, 2, 1);
        let ts = data(3, 20);
        let a = choose_targets(&f, &ts, &[0, 2], &spec, &plan(1, 9)).unwrap();
        assert_eq!(a.len(), 8);
        for pair in a.windows(2) {
            if pair[0].series == pair[1].series {
                assert!(pair[0].target.t1 < pair[1].target.t1);
            }
        }
        for s in &a {
            assert!(s.target.t1 >= 5 && s.target.t2 == s.target.t1 + 1 && s.target.t2 < 20);
            assert!(s.target.delta >= 0.0);
        }
        let b = choose_targets(&f, &ts, &[0, 2], &spec, &plan(1, 9)).unwrap();
        assert_eq!(a, b);
        let c = choose_targets(&f, &ts, &[0, 2], &spec, &plan(1, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn short_series_and_bad_gap() {
        let spec = WindowSpec::new(5, 2).unwrap();
        let f = WindowMlp::new(5, 2, 4, 2, 1);
        let ts = data(1, 6);
        assert!(choose_targets(&f, &ts, &[0], &spec, &plan(1, 0))
            .unwrap()
            .is_empty());
        assert!(choose_targets(&f, &ts, &[0], &spec, &plan(5, 0)).is_err());
        assert!(choose_targets(&f, &ts, &[0], &spec, &plan(0, 0)).is_err());
    }
}
