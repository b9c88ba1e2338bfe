use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Residual vector r(p) of a least-squares problem.
pub trait Residuals {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);

    /// Analytic ∂r_i/∂p_j, if available.
    fn jacobian(&self, _params: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// Central differences with step 1e-6·max(|p_j|, 1).
pub fn central_difference_jacobian<R: Residuals + ?Sized>(model: &R, params: &[f64]) -> DMatrix<f64> {
    let m = model.n_residuals();
    let n = params.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut p = params.to_vec();
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    for j in 0..n {
        let h = 1e-6 * params[j].abs().max(1.0);
        p[j] = params[j] + h;
        model.residuals(&p, &mut plus);
        p[j] = params[j] - h;
        model.residuals(&p, &mut minus);
        p[j] = params[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest cosine between r and any Jacobian column.
    pub gradient: f64,
    /// Relative step size.
    pub step: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-8,
            step: 1e-10,
            max_iterations: 500,
        }
    }
}

/// Bounded, weighted least-squares problem.
pub struct FitProblem<'a> {
    pub model: &'a dyn Residuals,
    pub initial: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Per-residual weights w_i ≥ 0; the objective is ½Σ w_i r_i².
    pub weights: Option<Vec<f64>>,
    pub tolerances: Tolerances,
}

impl<'a> FitProblem<'a> {
    pub fn new(model: &'a dyn Residuals, initial: Vec<f64>) -> Self {
        let n = initial.len();
        Self {
            model,
            initial,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            weights: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.model.n_params();
        if self.initial.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Domain("parameter, bound and model sizes differ".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Domain("lower bound exceeds upper bound".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.model.n_residuals() {
                return Err(Error::Domain("weight count differs from residual count".into()));
            }
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Domain("weights must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn clamp(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Weighted residuals √w_i·r_i.
    pub(crate) fn weighted_residuals(&self, p: &[f64]) -> DVector<f64> {
        let mut r = vec![0.0; self.model.n_residuals()];
        self.model.residuals(p, &mut r);
        if let Some(w) = &self.weights {
            for (ri, wi) in r.iter_mut().zip(w) {
                *ri *= wi.sqrt();
            }
        }
        DVector::from_vec(r)
    }

    pub(crate) fn weighted_jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = self
            .model
            .jacobian(p)
            .unwrap_or_else(|| central_difference_jacobian(self.model, p));
        if let Some(w) = &self.weights {
            for (i, wi) in w.iter().enumerate() {
                let s = wi.sqrt();
                j.row_mut(i).iter_mut().for_each(|v| *v *= s);
            }
        }
        j
    }

    /// Number of residuals carrying non-zero weight.
    pub(crate) fn effective_residuals(&self) -> usize {
        match &self.weights {
            Some(w) => w.iter().filter(|v| **v > 0.0).count(),
            None => self.model.n_residuals(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    ZeroResidual,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// (JᵀWJ)⁺ at the solution.
    pub unscaled_covariance: DMatrix<f64>,
    /// Unscaled covariance times the residual variance s² = Σw r²/(n − p).
    pub covariance: DMatrix<f64>,
    /// √(Σ w r²).
    pub residual_norm: f64,
    pub degrees_of_freedom: usize,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
}

impl FitOutcome {
    pub fn cost(&self) -> f64 {
        0.5 * self.residual_norm * self.residual_norm
    }

    pub fn std_error(&self, index: usize) -> f64 {
        self.covariance[(index, index)].max(0.0).sqrt()
    }
}

fn projected_gradient(g: &DVector<f64>, p: &[f64], lo: &[f64], hi: &[f64]) -> DVector<f64> {
    let mut out = g.clone();
    for i in 0..p.len() {
        // descent direction is −g
        if (p[i] <= lo[i] && g[i] > 0.0) || (p[i] >= hi[i] && g[i] < 0.0) {
            out[i] = 0.0;
        }
    }
    out
}

/// Bounded Levenberg–Marquardt with Marquardt diagonal scaling and the
/// gain-ratio damping update.
pub fn levenberg_marquardt(problem: &FitProblem<'_>) -> Result<FitOutcome> {
    problem.validate()?;
    let n = problem.model.n_params();
    let tol = problem.tolerances;
    let mut p = problem.initial.clone();
    problem.clamp(&mut p);

    let mut r = problem.weighted_residuals(&p);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("residuals are not finite at the starting point".into()));
    }
    let mut cost = 0.5 * r.norm_squared();
    let mut jac = problem.weighted_jacobian(&p);
    let mut mu = 1e-6;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    'outer: while iterations < tol.max_iterations {
        if cost == 0.0 {
            termination = Termination::ZeroResidual;
            break;
        }
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let pg = projected_gradient(&g, &p, &problem.lower, &problem.upper);
        let rnorm = r.norm();
        let cosine = (0..n)
            .map(|j| {
                let cn = jac.column(j).norm();
                if cn > 0.0 {
                    pg[j].abs() / (cn * rnorm)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if cosine <= tol.gradient {
            termination = Termination::Gradient;
            break;
        }
        let free: Vec<usize> = (0..n).filter(|&j| pg[j] != 0.0 || g[j] == 0.0).collect();
        let diag: Vec<f64> = (0..n).map(|j| a[(j, j)].max(1e-300)).collect();

        loop {
            iterations += 1;
            let k = free.len();
            let mut sys = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (ii, &i) in free.iter().enumerate() {
                rhs[ii] = -g[i];
                for (jj, &j) in free.iter().enumerate() {
                    sys[(ii, jj)] = a[(i, j)];
                }
                sys[(ii, ii)] += mu * diag[i];
            }
            let step = sys
                .clone()
                .cholesky()
                .map(|c| c.solve(&rhs))
                .or_else(|| sys.svd(true, true).solve(&rhs, 1e-15).ok());
            let Some(step) = step else {
                mu *= nu;
                nu *= 2.0;
                if iterations >= tol.max_iterations {
                    break 'outer;
                }
                continue;
            };
            let mut trial = p.clone();
            for (ii, &i) in free.iter().enumerate() {
                trial[i] += step[ii];
            }
            problem.clamp(&mut trial);
            let h = DVector::from_iterator(n, trial.iter().zip(&p).map(|(t, v)| t - v));
            let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if h.norm() <= tol.step * (pnorm + tol.step) {
                termination = Termination::Step;
                break 'outer;
            }
            let r_new = problem.weighted_residuals(&trial);
            let cost_new = 0.5 * r_new.norm_squared();
            let predicted = -(h.dot(&g)) - 0.5 * (h.transpose() * &a * &h)[(0, 0)];
            let rho = if predicted > 0.0 && cost_new.is_finite() {
                (cost - cost_new) / predicted
            } else {
                -1.0
            };
            if rho > 0.0 {
                p = trial;
                r = r_new;
                cost = cost_new;
                jac = problem.weighted_jacobian(&p);
                mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                continue 'outer;
            }
            mu *= nu;
            nu *= 2.0;
            if iterations >= tol.max_iterations || !mu.is_finite() {
                break 'outer;
            }
        }
    }

    let jac = problem.weighted_jacobian(&p);
    let a = jac.transpose() * &jac;
    let unscaled = a
        .clone()
        .pseudo_inverse(1e-14 * a.amax().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
    let unscaled = 0.5 * (&unscaled + unscaled.transpose());
    let dof = problem.effective_residuals().saturating_sub(n);
    let s2 = if dof > 0 { 2.0 * cost / dof as f64 } else { f64::NAN };
    Ok(FitOutcome {
        params: p,
        covariance: &unscaled * s2,
        unscaled_covariance: unscaled,
        residual_norm: (2.0 * cost).sqrt(),
        degrees_of_freedom: dof,
        converged: termination != Termination::MaxIterations,
        termination,
        iterations,
    })
}
