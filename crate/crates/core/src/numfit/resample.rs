use crate::error::{Error, Result};

/// Piecewise-linear interpolation of (x, y) at `at`; `x` ascending.
///
/// Returns `None` outside [x₀, xₙ].
pub fn interp_linear(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    let n = x.len();
    if n == 0 || at < x[0] || at > x[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(y[0]);
    }
    let i = x.partition_point(|v| *v <= at).clamp(1, n - 1);
    let (x0, x1) = (x[i - 1], x[i]);
    if at == x1 {
        return Some(y[i]);
    }
    let t = (at - x0) / (x1 - x0);
    Some(y[i - 1] + t * (y[i] - y[i - 1]))
}

/// Linear resampling of (x, y) onto `n` evenly spaced points over [lo, hi].
pub fn resample_uniform(x: &[f64], y: &[f64], lo: f64, hi: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Grid("resampling needs matching columns of >= 2 points".into()));
    }
    if !(hi > lo) || n < 2 {
        return Err(Error::Range(format!("bad resampling window [{lo}, {hi}] with {n} points")));
    }
    if lo < x[0] || hi > x[x.len() - 1] {
        return Err(Error::Range(format!(
            "window [{lo}, {hi}] outside data range [{}, {}]",
            x[0],
            x[x.len() - 1]
        )));
    }
    let grid = crate::forward::linspace(lo, hi, n);
    let values = grid
        .iter()
        .map(|&g| interp_linear(x, y, g).expect("inside checked range"))
        .collect();
    Ok((grid, values))
}

/// Returns the spacing of `x` if it is uniform to `rel_tol`.
pub fn check_uniform(x: &[f64], rel_tol: f64) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Grid("need at least two grid points".into()));
    }
    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Grid("grid must be increasing".into()));
    }
    for w in x.windows(2) {
        if ((w[1] - w[0]) - step).abs() > rel_tol * step {
            return Err(Error::Grid(format!(
                "non-uniform grid: spacing {} vs mean {step}",
                w[1] - w[0]
            )));
        }
    }
    Ok(step)
}
