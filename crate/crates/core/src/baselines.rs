//! Comparison methods that always return finite coefficients: Firth
//! bias-reduced logistic regression, posterior-mode logistic regression under
//! Cauchy priors, and least squares on the 0/1 response with clipped fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{loglik_unchecked, sigmoid, weighted_gram, Coefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    Firth,
    CauchyMap,
    Ols,
}

impl BaselineMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineMethod::Firth => "firth",
            BaselineMethod::CauchyMap => "cauchy",
            BaselineMethod::Ols => "ols",
        }
    }
}

/// Centering and scaling applied before the Cauchy fit: column `j` enters as
/// `(x_j - center_j) / scale_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub method: BaselineMethod,
    /// Coefficients in the original design coordinates.
    pub beta: Coefficients,
    /// Fitted probabilities in [0, 1].
    pub pihat: Vec<f64>,
    pub scaling: Option<Scaling>,
    /// Unclipped least-squares fitted values.
    pub raw_fitted: Option<Vec<f64>>,
    pub iterations: usize,
    /// Penalized objective after each accepted step (Firth and Cauchy).
    pub objective_trace: Vec<f64>,
}

impl BaselineFit {
    pub fn predict(&self, x_new: &DVector<f64>) -> Result<f64> {
        if x_new.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: x_new.len(),
            });
        }
        let eta = self.beta.as_vector().dot(x_new);
        if !eta.is_finite() {
            return Err(Error::Domain("new point has non-finite entries".into()));
        }
        Ok(match self.method {
            BaselineMethod::Ols => eta.clamp(0.0, 1.0),
            _ => sigmoid(eta),
        })
    }
}

fn require_full_rank(d: &Dataset) -> Result<()> {
    let deps = linalg::dependent_columns(d.x());
    if deps.is_empty() {
        Ok(())
    } else {
        Err(Error::Singular {
            columns: deps.iter().map(|&j| d.names()[j].clone()).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FirthConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FirthConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-9,
        }
    }
}

fn firth_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Option<f64> {
    let eta = x * beta;
    let info = weighted_gram(x, eta.iter().map(|&e| sigmoid(e) * sigmoid(-e)));
    let ch = info.cholesky()?;
    let logdet: f64 = ch.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    Some(loglik_unchecked(x, y, beta) + 0.5 * logdet)
}

/// Maximizes `loglik + 0.5 log det I(beta)` by modified-score Fisher steps.
pub fn fit_firth(d: &Dataset, config: &FirthConfig) -> Result<BaselineFit> {
    require_full_rank(d)?;
    let (x, y) = (d.x(), d.y());
    let p = d.p();
    let mut beta = DVector::zeros(p);
    let mut obj = firth_objective(x, y, &beta)
        .ok_or_else(|| Error::NonConvergence("singular information".into()))?;
    let mut trace = vec![obj];
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..config.max_iter {
        iterations = it;
        let eta = x * &beta;
        let pi = eta.map(sigmoid);
        let w = pi.map(|v| v * (1.0 - v));
        let info = weighted_gram(x, w.iter().copied());
        let inv = linalg::spd_inverse(&info)
            .ok_or_else(|| Error::NonConvergence("singular information".into()))?;
        let h = DVector::from_fn(d.n(), |i, _| {
            let xi = x.row(i).transpose();
            w[i] * xi.dot(&(&inv * &xi))
        });
        let adj = DVector::from_fn(d.n(), |i, _| y[i] - pi[i] + h[i] * (0.5 - pi[i]));
        let u = x.transpose() * adj;
        if u.amax() < config.tol {
            converged = true;
            break;
        }
        let step = &inv * &u;
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            if let Some(v) = firth_objective(x, y, &cand) {
                if v >= obj - 1e-12 * obj.abs().max(1.0) {
                    beta = cand;
                    obj = v;
                    trace.push(v);
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Firth iteration stopped after {iterations} iterations without reaching tolerance"
        )));
    }
    let pihat = (x * &beta).iter().map(|&e| sigmoid(e)).collect();
    Ok(BaselineFit {
        method: BaselineMethod::Firth,
        beta: Coefficients::new(beta)?,
        pihat,
        scaling: None,
        raw_fitted: None,
        iterations,
        objective_trace: trace,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CauchyConfig {
    pub slope_scale: f64,
    pub intercept_scale: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self {
            slope_scale: 2.5,
            intercept_scale: 10.0,
            max_iter: 500,
            tol: 1e-9,
        }
    }
}

fn is_binary(col: &[f64]) -> bool {
    col.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Standardization: binary columns are centered, other columns centered and
/// divided by twice their standard deviation. The intercept is left alone and
/// nothing is centered when the model has no intercept.
pub fn cauchy_scaling(d: &Dataset) -> Scaling {
    let n = d.n() as f64;
    let mut center = vec![0.0; d.p()];
    let mut scale = vec![1.0; d.p()];
    for j in 0..d.p() {
        if d.has_intercept() && j == 0 {
            continue;
        }
        let col: Vec<f64> = d.x().column(j).iter().copied().collect();
        let mean = col.iter().sum::<f64>() / n;
        if d.has_intercept() {
            center[j] = mean;
        }
        if !is_binary(&col) && d.n() > 1 {
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            if sd > 0.0 {
                scale[j] = 2.0 * sd;
            }
        }
    }
    Scaling { center, scale }
}

/// Penalized score of the Cauchy log-posterior in scaled coordinates.
fn cauchy_gradient(
    xs: &DMatrix<f64>,
    y: &DVector<f64>,
    b: &DVector<f64>,
    s: &[f64],
) -> DVector<f64> {
    let resid = y - (xs * b).map(sigmoid);
    let mut g = xs.transpose() * resid;
    for j in 0..b.len() {
        g[j] -= 2.0 * b[j] / (s[j] * s[j] + b[j] * b[j]);
    }
    g
}

fn cauchy_objective(xs: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, s: &[f64]) -> f64 {
    let prior: f64 = b
        .iter()
        .zip(s)
        .map(|(v, sc)| -(1.0 + (v / sc).powi(2)).ln())
        .sum();
    loglik_unchecked(xs, y, b) + prior
}

/// Posterior mode under independent Cauchy priors.
pub fn fit_cauchy_map(d: &Dataset, config: &CauchyConfig) -> Result<BaselineFit> {
    if !(config.slope_scale > 0.0 && config.intercept_scale > 0.0) {
        return Err(Error::Domain("prior scales must be positive".into()));
    }
    let scaling = cauchy_scaling(d);
    let xs = DMatrix::from_fn(d.n(), d.p(), |i, j| {
        (d.x()[(i, j)] - scaling.center[j]) / scaling.scale[j]
    });
    let y = d.y();
    let s: Vec<f64> = (0..d.p())
        .map(|j| {
            if d.has_intercept() && j == 0 {
                config.intercept_scale
            } else {
                config.slope_scale
            }
        })
        .collect();
    let mut b = DVector::zeros(d.p());
    let mut obj = cauchy_objective(&xs, y, &b, &s);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..config.max_iter {
        iterations = it;
        let g = cauchy_gradient(&xs, y, &b, &s);
        if g.amax() < config.tol {
            converged = true;
            break;
        }
        let eta = &xs * &b;
        let mut h = weighted_gram(&xs, eta.iter().map(|&e| sigmoid(e) * sigmoid(-e)));
        for j in 0..d.p() {
            h[(j, j)] += 2.0 / (s[j] * s[j] + b[j] * b[j]);
        }
        let step = linalg::solve_spd(&h, &g, 1e-12)
            .ok_or_else(|| Error::NonConvergence("singular curvature in Cauchy fit".into()))?;
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &b + &step * t;
            let v = cauchy_objective(&xs, y, &cand, &s);
            if v >= obj - 1e-12 * obj.abs().max(1.0) {
                b = cand;
                obj = v;
                trace.push(v);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Cauchy posterior mode not reached after {iterations} iterations"
        )));
    }
    let mut beta = DVector::from_fn(d.p(), |j, _| b[j] / scaling.scale[j]);
    if d.has_intercept() {
        let shift: f64 = (1..d.p()).map(|j| beta[j] * scaling.center[j]).sum();
        beta[0] -= shift;
    }
    let pihat = (d.x() * &beta).iter().map(|&e| sigmoid(e)).collect();
    Ok(BaselineFit {
        method: BaselineMethod::CauchyMap,
        beta: Coefficients::new(beta)?,
        pihat,
        scaling: Some(scaling),
        raw_fitted: None,
        iterations,
        objective_trace: trace,
    })
}

/// Least squares on the 0/1 response; fitted values clipped to [0, 1].
pub fn fit_ols(d: &Dataset) -> Result<BaselineFit> {
    require_full_rank(d)?;
    let x = d.x();
    let gram = x.transpose() * x;
    let rhs = x.transpose() * d.y();
    let beta = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Singular {
            columns: Vec::new(),
        })?;
    let raw: Vec<f64> = (x * &beta).iter().copied().collect();
    Ok(BaselineFit {
        method: BaselineMethod::Ols,
        beta: Coefficients::new(beta)?,
        pihat: raw.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        scaling: None,
        raw_fitted: Some(raw),
        iterations: 0,
        objective_trace: Vec::new(),
    })
}

/// Fits `method` with default settings.
pub fn fit_baseline(method: BaselineMethod, d: &Dataset) -> Result<BaselineFit> {
    match method {
        BaselineMethod::Firth => fit_firth(d, &FirthConfig::default()),
        BaselineMethod::CauchyMap => fit_cauchy_map(d, &CauchyConfig::default()),
        BaselineMethod::Ols => fit_ols(d),
    }
}
