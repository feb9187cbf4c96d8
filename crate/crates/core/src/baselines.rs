//! Non-path attributors: feature occlusion and a random control.

use ndarray::{s, Array2};

use crate::attribution::{AttributionMap, AttributionParams, ChangeTarget};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng;
use crate::series::{TimeSeries, WindowSpec};

/// Occlusion through the wrapper: `phi[t, d] = g_c(X) - g_c(X with X[t, d]
/// replaced by X[t - 1, d])`. The first row of the range has no predecessor
/// and gets zero.
pub fn occlusion_attribute<C: Classifier + ?Sized>(
    f: &C,
    series: &TimeSeries,
    spec: &WindowSpec,
    target: &ChangeTarget,
) -> Result<AttributionMap> {
    target.check_indices(spec, series.len(), 0)?;
    let expected = (spec.window_size, series.num_features());
    if f.input_shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: f.input_shape(),
        });
    }
    let w = spec.window_size;
    let c = target.target_class;
    let concat = target.concat_input(series, spec).to_owned();
    let (o1, o2) = target.window_offsets(spec);
    let base1 = f.predict(concat.slice(s![o1..o1 + w, ..]))?[c];
    let base2 = f.predict(concat.slice(s![o2..o2 + w, ..]))?[c];

    let mut map = AttributionMap::zeros(*target, spec, series.num_features(), "occlusion");
    let mut work = concat.clone();
    for t in 1..concat.nrows() {
        for d in 0..concat.ncols() {
            let fill = concat[[t - 1, d]];
            if fill == concat[[t, d]] {
                continue;
            }
            work[[t, d]] = fill;
            let eval = |off: usize, base: f64| -> Result<f64> {
                if (off..off + w).contains(&t) {
                    Ok(f.predict(work.slice(s![off..off + w, ..]))?[c])
                } else {
                    Ok(base)
                }
            };
            let g = eval(o2, base2)? - eval(o1, base1)?;
            map.values[[t, d]] = (base2 - base1) - g;
            work[[t, d]] = concat[[t, d]];
        }
    }
    Ok(map)
}

/// I.i.d. uniform `[-1, 1)` scores from a seeded stream.
pub fn random_attribute(
    target: &ChangeTarget,
    spec: &WindowSpec,
    num_features: usize,
    seed: u64,
) -> AttributionMap {
    let mut r = rng::rng(seed);
    let values = Array2::from_shape_simple_fn((target.span(spec), num_features), || {
        rng::symmetric(&mut r, 1.0)
    });
    AttributionMap {
        start_time: target.start_time(spec),
        values,
        target: *target,
        method_name: "random".into(),
        params: AttributionParams {
            seed: Some(seed),
            ..AttributionParams::default()
        },
    }
}
