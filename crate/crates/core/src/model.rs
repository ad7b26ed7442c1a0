//! Logistic model primitives: likelihood, score, Fisher information and an
//! IRLS fitter that reports divergence instead of silently returning huge
//! coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;

/// `exp(t) / (1 + exp(t))`, rejecting non-finite input.
pub fn logistic(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("logistic of non-finite value {t}")));
    }
    Ok(sigmoid(t))
}

/// Overflow-free logistic function.
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(t))` computed as `-log1p(exp(-t))`.
#[inline]
pub(crate) fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// `log(p / (1 - p))`.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Bernoulli log-likelihood contribution of one observation with linear
/// predictor `eta`.
#[inline]
pub(crate) fn loglik_term(y: f64, eta: f64) -> f64 {
    if y == 1.0 {
        log_sigmoid(eta)
    } else {
        log_sigmoid(-eta)
    }
}

/// Coefficient vector in log-odds units. Always finite; coefficients "at
/// infinity" are described by a separation report instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn new(beta: DVector<f64>) -> Result<Self> {
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(Self(beta.iter().copied().collect()))
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn check_dims(d: &Dataset, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != d.p() {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            got: beta.len(),
        });
    }
    Ok(())
}

/// Log-likelihood of `beta` on `d`.
pub fn loglik(d: &Dataset, beta: &DVector<f64>) -> Result<f64> {
    check_dims(d, beta)?;
    Ok(loglik_unchecked(d.x(), d.y(), beta))
}

pub(crate) fn loglik_unchecked(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| loglik_term(yi, e))
        .sum()
}

/// Gradient of the log-likelihood: `sum_i (y_i - pi_i) x_i`.
pub fn score(d: &Dataset, beta: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims(d, beta)?;
    Ok(score_unchecked(d.x(), d.y(), beta))
}

pub(crate) fn score_unchecked(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
) -> DVector<f64> {
    let resid = DVector::from_iterator(
        x.nrows(),
        (x * beta)
            .iter()
            .zip(y.iter())
            .map(|(&e, &yi)| yi - sigmoid(e)),
    );
    x.transpose() * resid
}

/// Expected information `X' W X` with `W = diag(pi (1 - pi))`.
pub fn fisher_info(d: &Dataset, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dims(d, beta)?;
    Ok(fisher_unchecked(d.x(), beta))
}

pub(crate) fn fisher_unchecked(x: &DMatrix<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    let eta = x * beta;
    weighted_gram(
        x,
        eta.iter().map(|&e| {
            let p = sigmoid(e);
            p * (1.0 - p)
        }),
    )
}

/// `X' diag(w) X`, symmetrized exactly.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let p = x.ncols();
    let mut out = DMatrix::zeros(p, p);
    for (i, wi) in w.enumerate() {
        if wi == 0.0 {
            continue;
        }
        let row = x.row(i);
        for a in 0..p {
            let ra = row[a] * wi;
            for b in 0..=a {
                out[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            out[(b, a)] = out[(a, b)];
        }
    }
    out
}

/// Controls for [`fit_irls`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// When set, a rank-deficient design is fitted with this relative ridge
    /// instead of being rejected.
    pub ridge: Option<f64>,
    /// Coefficient norm beyond which the iterates are declared divergent.
    pub divergence_threshold: f64,
    /// Fitted probabilities this close to 0 or 1 also signal divergence.
    pub boundary_eps: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-8,
            ridge: None,
            divergence_threshold: 1e4,
            boundary_eps: 1e-8,
        }
    }
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Coefficients,
    pub loglik: f64,
    pub pihat: Vec<f64>,
    pub converged: bool,
    /// Set when the iterates ran off toward infinity (separation).
    pub diverged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted iteration, starting at beta = 0.
    pub loglik_trace: Vec<f64>,
}

impl FitResult {
    pub(crate) fn at(x: &DMatrix<f64>, y: &DVector<f64>, beta: DVector<f64>) -> Result<Self> {
        let eta = x * &beta;
        let pihat = eta.iter().map(|&e| sigmoid(e)).collect();
        let ll = loglik_unchecked(x, y, &beta);
        let g = score_unchecked(x, y, &beta).norm();
        Ok(Self {
            beta: Coefficients::new(beta)?,
            loglik: ll,
            pihat,
            converged: true,
            diverged: false,
            iterations: 0,
            gradient_norm: g,
            loglik_trace: vec![ll],
        })
    }

    pub fn beta_vector(&self) -> DVector<f64> {
        self.beta.as_vector()
    }
}

const BOUNDARY_STREAK: usize = 3;

/// Fisher scoring (IRLS) with step-halving.
///
/// On separated data the iterates diverge; the fit then returns
/// `converged = false, diverged = true` with the last iterate rather than an
/// error.
pub fn fit_irls(d: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let x = d.x();
    let y = d.y();
    let p = d.p();

    if config.ridge.is_none() && linalg::rank(x) < p {
        let deps = linalg::dependent_columns(x);
        return Err(Error::Singular {
            columns: deps.into_iter().map(|j| d.names()[j].clone()).collect(),
        });
    }
    let ridge = config.ridge.unwrap_or(1e-12);

    let mut beta = DVector::zeros(p);
    let mut ll = loglik_unchecked(x, y, &beta);
    let mut trace = vec![ll];
    let mut grad = score_unchecked(x, y, &beta);
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    let mut boundary_streak = 0;
    let mut last_step = f64::INFINITY;

    for iter in 1..=config.max_iter {
        iterations = iter;
        let info = fisher_unchecked(x, &beta);
        let step = match linalg::solve_spd(&info, &grad, ridge) {
            Some(s) => s,
            None => {
                diverged = at_boundary(x, &beta, config.boundary_eps);
                break;
            }
        };

        // Step-halving keeps the log-likelihood non-decreasing up to rounding.
        let floor = ll - 1e-12 * ll.abs().max(1.0);
        let mut t = 1.0;
        let mut candidate = &beta + &step * t;
        let mut cand_ll = loglik_unchecked(x, y, &candidate);
        let mut halvings = 0;
        while cand_ll < floor && halvings < 40 {
            t *= 0.5;
            candidate = &beta + &step * t;
            cand_ll = loglik_unchecked(x, y, &candidate);
            halvings += 1;
        }
        if cand_ll < floor {
            break;
        }
        let step_norm = step.norm() * t;
        beta = candidate;
        ll = cand_ll;
        trace.push(ll);
        grad = score_unchecked(x, y, &beta);

        if beta.norm() > config.divergence_threshold {
            diverged = true;
            break;
        }
        // Near a finite MLE Newton steps collapse; along a recession
        // direction they keep roughly the same length while fitted values
        // pile up at 0 or 1.
        let stalled = step_norm >= 0.5 * last_step;
        last_step = step_norm;
        boundary_streak = if stalled && at_boundary(x, &beta, config.boundary_eps) {
            boundary_streak + 1
        } else {
            0
        };
        if boundary_streak >= BOUNDARY_STREAK {
            diverged = true;
            break;
        }
        if grad.norm() <= config.grad_tol && step_norm <= 1e-6 * (1.0 + beta.norm()) {
            converged = true;
            break;
        }
    }
    if !converged && !diverged && grad.norm() <= config.grad_tol {
        converged = true;
    }

    let eta = x * &beta;
    Ok(FitResult {
        pihat: eta.iter().map(|&e| sigmoid(e)).collect(),
        beta: Coefficients::new(beta)?,
        loglik: ll,
        converged: converged && !diverged,
        diverged,
        iterations,
        gradient_norm: grad.norm(),
        loglik_trace: trace,
    })
}

fn at_boundary(x: &DMatrix<f64>, beta: &DVector<f64>, eps: f64) -> bool {
    // pi within eps of 0 or 1  <=>  |eta| >= logit(1 - eps)
    let limit = logit(1.0 - eps);
    (x * beta).iter().any(|e| e.abs() >= limit)
}
