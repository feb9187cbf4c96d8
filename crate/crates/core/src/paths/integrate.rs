use ndarray::Array2;
use rayon::prelude::*;

use super::{IntegratorConfig, Path};
use crate::classifier::Classifier;
use crate::error::{Error, Result};

/// `(segment, local ratio)` of every grid point, from `alpha = 0` to `alpha = 1`.
///
/// With `q` steps per segment, point `i` sits on segment `min(i / q, m - 1)`;
/// boundaries `k / m` are always grid points.
pub fn sample_grid(segment_count: usize, cfg: &IntegratorConfig) -> Vec<(usize, f64)> {
    let m = segment_count;
    if m == 0 {
        return Vec::new();
    }
    let q = cfg.steps_per_segment(m);
    (0..=q * m)
        .map(|i| {
            let k = (i / q).min(m - 1);
            (k, (i - k * q) as f64 / q as f64)
        })
        .collect()
}

/// Per-segment trapezoid contributions of the path integral
/// `int_0^1 d f_c(gamma) / dX * d gamma / d alpha`, each `W x D`.
///
/// Gradient evaluations run in parallel; accumulation is sequential in grid
/// order, so results do not depend on the thread count.
pub fn ig_segment_integrals<C, P>(
    f: &C,
    path: &P,
    class: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<Array2<f64>>>
where
    C: Classifier + ?Sized,
    P: Path + ?Sized,
{
    cfg.validate()?;
    let shape = path.shape();
    if shape != f.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: f.input_shape(),
            actual: shape,
        });
    }
    let m = path.segment_count();
    if m == 0 {
        return Ok(Vec::new());
    }
    let grid = sample_grid(m, cfg);
    let evaluated: Vec<(Array2<f64>, Array2<f64>)> = grid
        .par_iter()
        .map(|&(k, r)| {
            let x = path.eval_segment(k, r);
            let g = f.grad(x.view(), class)?;
            Ok((x, g))
        })
        .collect::<Result<_>>()?;

    let q = cfg.steps_per_segment(m);
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = Array2::zeros(shape);
        for i in k * q + 1..=(k + 1) * q {
            let (x1, g1) = &evaluated[i];
            let (x0, g0) = &evaluated[i - 1];
            ndarray::Zip::from(&mut acc)
                .and(x1)
                .and(x0)
                .and(g1)
                .and(g0)
                .for_each(|a, &x1, &x0, &g1, &g0| *a += (x1 - x0) * ((g1 + g0) / 2.0));
        }
        out.push(acc);
    }
    Ok(out)
}

/// Integrated gradients along `path` in the window's own coordinates.
pub fn ig_line_integral<C, P>(
    f: &C,
    path: &P,
    class: usize,
    cfg: &IntegratorConfig,
) -> Result<Array2<f64>>
where
    C: Classifier + ?Sized,
    P: Path + ?Sized,
{
    let segments = ig_segment_integrals(f, path, class, cfg)?;
    let mut total = Array2::zeros(path.shape());
    for s in &segments {
        total += s;
    }
    Ok(total)
}
