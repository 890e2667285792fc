#![allow(dead_code)]

use qres_core::experiments::TimeSeries;

/// Linear interpolation of `(xs, ys)` at `x`; `xs` ascending.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (x - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

/// Largest pointwise spread of the curves `y(rescaled_t)` over a common grid
/// on the overlap of their ranges. With `normalize`, each curve is divided by
/// its maximum first.
pub fn collapse_spread(series: &[TimeSeries], normalize: bool, n: usize) -> f64 {
    let curves: Vec<(Vec<f64>, Vec<f64>)> = series
        .iter()
        .map(|s| {
            let x: Vec<f64> = s.rows.iter().map(|r| r.rescaled_t).collect();
            let mut y: Vec<f64> = s.rows.iter().map(|r| r.concurrence).collect();
            if normalize {
                let top = y.iter().cloned().fold(0.0, f64::max);
                y.iter_mut().for_each(|v| *v /= top);
            }
            (x, y)
        })
        .collect();
    let lo = curves.iter().map(|(x, _)| x[0]).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves.iter().map(|(x, _)| x[x.len() - 1]).fold(f64::INFINITY, f64::min);
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let vals: Vec<f64> = curves.iter().map(|(xs, ys)| interp(xs, ys, x)).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(max - min);
    }
    worst
}
