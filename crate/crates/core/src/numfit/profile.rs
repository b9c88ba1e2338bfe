use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::lm::{levenberg_marquardt, FitOutcome, FitProblem, Residuals};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    TwoSided,
    /// The lower end reached the parameter's lower bound; only the upper
    /// limit is informative.
    UpperBoundOnly,
    /// The upper end could not be bounded.
    OpenAbove,
    /// Neither end could be bounded.
    Unconstrained,
    /// Profiling failed; symmetric covariance interval reported instead.
    CovarianceFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub kind: IntervalKind,
}

impl ProfileInterval {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            estimate: self.estimate * factor,
            lower: self.lower * factor,
            upper: self.upper * factor,
            kind: self.kind,
        }
    }
}

/// Model with one parameter pinned.
struct Pinned<'a> {
    inner: &'a dyn Residuals,
    index: usize,
    value: f64,
}

impl Pinned<'_> {
    fn expand(&self, rest: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(rest.len() + 1);
        full.extend_from_slice(&rest[..self.index]);
        full.push(self.value);
        full.extend_from_slice(&rest[self.index..]);
        full
    }
}

impl Residuals for Pinned<'_> {
    fn n_params(&self) -> usize {
        self.inner.n_params() - 1
    }
    fn n_residuals(&self) -> usize {
        self.inner.n_residuals()
    }
    fn residuals(&self, params: &[f64], out: &mut [f64]) {
        self.inner.residuals(&self.expand(params), out)
    }
    fn jacobian(&self, params: &[f64]) -> Option<DMatrix<f64>> {
        self.inner
            .jacobian(&self.expand(params))
            .map(|j| j.remove_column(self.index))
    }
}

fn drop_index(v: &[f64], index: usize) -> Vec<f64> {
    v.iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, x)| *x)
        .collect()
}

/// Minimum weighted sum of squares with parameter `index` held at `value`.
fn profiled_ss(
    problem: &FitProblem<'_>,
    index: usize,
    value: f64,
    start: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if problem.model.n_params() == 1 {
        let r = problem.weighted_residuals(&[value]);
        return Ok((r.norm_squared(), Vec::new()));
    }
    let pinned = Pinned {
        inner: problem.model,
        index,
        value,
    };
    let sub = FitProblem {
        model: &pinned,
        initial: drop_index(start, index),
        lower: drop_index(&problem.lower, index),
        upper: drop_index(&problem.upper, index),
        weights: problem.weights.clone(),
        tolerances: problem.tolerances,
    };
    let out = levenberg_marquardt(&sub)?;
    if !out.residual_norm.is_finite() {
        return Err(Error::FitFailed("profile fit diverged".into()));
    }
    let full = pinned.expand(&out.params);
    Ok((out.residual_norm * out.residual_norm, full))
}

enum End {
    Crossed(f64),
    AtBound(f64),
    Open,
}

fn search(
    problem: &FitProblem<'_>,
    outcome: &FitOutcome,
    index: usize,
    threshold: f64,
    direction: f64,
    first_step: f64,
) -> Result<End> {
    let est = outcome.params[index];
    let bound = if direction > 0.0 {
        problem.upper[index]
    } else {
        problem.lower[index]
    };
    if est == bound {
        return Ok(End::AtBound(bound));
    }
    let mut inside = est;
    let mut warm = outcome.params.clone();
    let mut step = first_step;
    for _ in 0..60 {
        let mut probe = est + direction * step;
        let hit_bound = (direction > 0.0 && probe >= bound) || (direction < 0.0 && probe <= bound);
        if hit_bound {
            probe = bound;
        }
        let (ss, fitted) = profiled_ss(problem, index, probe, &warm)?;
        if ss >= threshold {
            let (mut a, mut b) = (inside, probe);
            for _ in 0..50 {
                let mid = 0.5 * (a + b);
                let (ss_mid, fit_mid) = profiled_ss(problem, index, mid, &warm)?;
                if ss_mid >= threshold {
                    b = mid;
                } else {
                    a = mid;
                    warm = fit_mid;
                }
                if (b - a).abs() <= 1e-9 * (est.abs() + first_step) {
                    break;
                }
            }
            return Ok(End::Crossed(0.5 * (a + b)));
        }
        if hit_bound {
            return Ok(End::AtBound(bound));
        }
        inside = probe;
        warm = fitted;
        step *= 2.0;
    }
    Ok(End::Open)
}

/// Profile-likelihood interval for one parameter at confidence `level`.
///
/// The interval is the set where the profiled weighted sum of squares stays
/// below SS_min·(1 + F₁,ν(level)/ν), which reproduces the t-based covariance
/// interval exactly when the model is linear.
pub fn profile_likelihood_ci(
    problem: &FitProblem<'_>,
    outcome: &FitOutcome,
    index: usize,
    level: f64,
) -> Result<ProfileInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if index >= outcome.params.len() {
        return Err(Error::Domain(format!("parameter index {index} out of range")));
    }
    let dof = outcome.degrees_of_freedom;
    let est = outcome.params[index];
    let se = outcome.std_error(index);
    let fallback = || -> Result<ProfileInterval> {
        if dof == 0 || !se.is_finite() {
            return Err(Error::FitFailed(
                "profile failed and no covariance interval is available".into(),
            ));
        }
        let t = StudentsT::new(0.0, 1.0, dof as f64)
            .map_err(|e| Error::FitFailed(e.to_string()))?
            .inverse_cdf(0.5 + 0.5 * level);
        Ok(ProfileInterval {
            estimate: est,
            lower: (est - t * se).max(problem.lower[index]),
            upper: (est + t * se).min(problem.upper[index]),
            kind: IntervalKind::CovarianceFallback,
        })
    };
    if dof == 0 || !outcome.converged {
        return fallback();
    }
    let f = FisherSnedecor::new(1.0, dof as f64)
        .map_err(|e| Error::FitFailed(e.to_string()))?
        .inverse_cdf(level);
    let ss_min = outcome.residual_norm * outcome.residual_norm;
    let threshold = ss_min * (1.0 + f / dof as f64);
    let first = if se.is_finite() && se > 0.0 {
        se
    } else {
        1e-3 * est.abs().max(1.0)
    };
    let lower = search(problem, outcome, index, threshold, -1.0, first);
    let upper = search(problem, outcome, index, threshold, 1.0, first);
    let (lower, upper) = match (lower, upper) {
        (Ok(l), Ok(u)) => (l, u),
        _ => return fallback(),
    };
    let (lo, lo_bound) = match lower {
        End::Crossed(v) => (v, false),
        End::AtBound(v) => (v, true),
        End::Open => (f64::NEG_INFINITY, true),
    };
    let (hi, hi_open) = match upper {
        End::Crossed(v) => (v, false),
        End::AtBound(v) => (v, true),
        End::Open => (f64::INFINITY, true),
    };
    let kind = match (lo_bound, hi_open) {
        (false, false) => IntervalKind::TwoSided,
        (true, false) => IntervalKind::UpperBoundOnly,
        (false, true) => IntervalKind::OpenAbove,
        (true, true) => IntervalKind::Unconstrained,
    };
    Ok(ProfileInterval {
        estimate: est,
        lower: lo.min(est),
        upper: hi.max(est),
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl Residuals for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            self.x.len()
        }
        fn residuals(&self, p: &[f64], out: &mut [f64]) {
            for i in 0..self.x.len() {
                out[i] = p[0] + p[1] * self.x[i] - self.y[i];
            }
        }
    }

    fn line() -> Line {
        let x: Vec<f64> = (0..25).map(|i| i as f64 * 0.2).collect();
        let noise = [0.3, -0.1, 0.2, -0.4, 0.1];
        let y = x
            .iter()
            .enumerate()
            .map(|(i, v)| 1.0 + 0.5 * v + 0.1 * noise[i % 5])
            .collect();
        Line { x, y }
    }

    #[test]
    fn linear_profile_matches_covariance_interval() {
        let model = line();
        let problem = FitProblem::new(&model, vec![0.0, 0.0]);
        let out = levenberg_marquardt(&problem).unwrap();
        let ci = profile_likelihood_ci(&problem, &out, 1, 0.95).unwrap();
        let t = StudentsT::new(0.0, 1.0, out.degrees_of_freedom as f64)
            .unwrap()
            .inverse_cdf(0.975);
        let half = t * out.std_error(1);
        assert_eq!(ci.kind, IntervalKind::TwoSided);
        assert!(((ci.upper - ci.estimate) - half).abs() < 0.01 * half);
        assert!(((ci.estimate - ci.lower) - half).abs() < 0.01 * half);
    }

    #[test]
    fn parameter_at_bound_gives_one_sided_interval() {
        let model = line();
        let problem =
            FitProblem::new(&model, vec![0.0, 0.0]).with_bounds(vec![1.2, -10.0], vec![10.0, 10.0]);
        let out = levenberg_marquardt(&problem).unwrap();
        assert!((out.params[0] - 1.2).abs() < 1e-12);
        let ci = profile_likelihood_ci(&problem, &out, 0, 0.95).unwrap();
        assert_eq!(ci.kind, IntervalKind::UpperBoundOnly);
        assert_eq!(ci.lower, 1.2);
        assert!(ci.upper > 1.2);
    }
}
