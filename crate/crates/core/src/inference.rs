//! Confidence intervals for mean-value parameters `pi(x_k)`.
//!
//! Problematic points get one-sided intervals: one endpoint is the observed
//! outcome and the other is the most extreme `logistic(x_k' beta)` among
//! coefficient vectors whose log-likelihood over `I` is at least `log alpha`.
//! Along any fixed value `tau` of the oriented linear predictor the best
//! attainable log-likelihood is a concave function of `tau`, so the extreme
//! value is found by bisection on `tau` with a Newton feasibility check on each
//! slice.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{fisher_unchecked, log_sigmoid, logit, sigmoid, FitResult};
use crate::separation::{CompletionFit, Lcm, SeparationKind, SeparationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    LowerOneSided,
    UpperOneSided,
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub index: usize,
    pub y: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub side: Side,
    pub alpha: f64,
    /// Log-likelihood over `I` at the free endpoint (one-sided rows only).
    pub constraint_loglik: Option<f64>,
}

impl IntervalRecord {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub alpha: f64,
    pub records: Vec<IntervalRecord>,
    pub failures: Vec<IntervalFailure>,
}

impl IntervalSet {
    pub fn mean_length(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        Some(
            self.records.iter().map(IntervalRecord::length).sum::<f64>()
                / self.records.len() as f64,
        )
    }

    pub fn get(&self, index: usize) -> Option<&IntervalRecord> {
        self.records.iter().find(|r| r.index == index)
    }

    fn merge(mut self, other: IntervalSet) -> Self {
        self.records.extend(other.records);
        self.failures.extend(other.failures);
        self.records.sort_by_key(|r| r.index);
        self.failures.sort_by_key(|f| f.index);
        self
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Two-sided standard normal critical value `z_{1 - alpha/2}`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(Normal::standard().inverse_cdf(1.0 - alpha / 2.0))
}

/// Tuning for the one-sided interval solver.
#[derive(Debug, Clone, Copy)]
pub struct OneSidedConfig {
    /// Absolute width of the final bisection bracket on the linear predictor.
    pub bracket_tol: f64,
    pub max_bisections: usize,
    pub newton_iter: usize,
}

impl Default for OneSidedConfig {
    fn default() -> Self {
        Self {
            bracket_tol: 1e-10,
            max_bisections: 200,
            newton_iter: 200,
        }
    }
}

/// One-sided intervals for every problematic point.
pub fn one_sided_ci(d: &Dataset, report: &SeparationReport, alpha: f64) -> Result<IntervalSet> {
    one_sided_ci_with(d, report, alpha, &OneSidedConfig::default())
}

pub fn one_sided_ci_with(
    d: &Dataset,
    report: &SeparationReport,
    alpha: f64,
    config: &OneSidedConfig,
) -> Result<IntervalSet> {
    check_alpha(alpha)?;
    let problem = Problem::new(d, report, alpha)?;
    let results: Vec<std::result::Result<IntervalRecord, IntervalFailure>> = report
        .problematic
        .par_iter()
        .enumerate()
        .map(|(j, &k)| {
            let yk = d.y()[k];
            problem
                .extreme(j, config)
                .map(|(tau, ll)| {
                    let free = sigmoid(tau);
                    let (lower, upper, side) = if yk == 1.0 {
                        (free, 1.0, Side::UpperOneSided)
                    } else {
                        (0.0, 1.0 - free, Side::LowerOneSided)
                    };
                    IntervalRecord {
                        index: k,
                        y: yk,
                        estimate: yk,
                        lower,
                        upper,
                        side,
                        alpha,
                        constraint_loglik: Some(ll),
                    }
                })
                .map_err(|e| IntervalFailure {
                    index: k,
                    message: e.to_string(),
                })
        })
        .collect();
    let mut set = IntervalSet {
        alpha,
        records: Vec::new(),
        failures: Vec::new(),
    };
    for r in results {
        match r {
            Ok(rec) => set.records.push(rec),
            Err(f) => set.failures.push(f),
        }
    }
    Ok(set)
}

/// Log-likelihood over `I` in free coordinates `gamma`:
/// `sum_i log_sigmoid(offset_i + rows_i' gamma)`, working on column-scaled
/// data with the LCM part of the coefficients held fixed.
struct Problem {
    rows: DMatrix<f64>,
    offset: DVector<f64>,
    start: DVector<f64>,
    log_alpha: f64,
    alpha: f64,
}

impl Problem {
    fn new(d: &Dataset, report: &SeparationReport, alpha: f64) -> Result<Self> {
        if report.kind == SeparationKind::None {
            return Err(Error::Precondition(
                "one-sided intervals need separated data; use Wald intervals instead".into(),
            ));
        }
        let direction = report
            .direction_vector()
            .ok_or_else(|| Error::Precondition("separation report carries no direction".into()))?;
        let (xs, scale) = linalg::column_max_scale(d.x());
        let p = d.p();
        let (beta0, null) = match &report.lcm {
            Some(lcm) => {
                let xc = xs.select_rows(&lcm.rows);
                let (_, null) = linalg::row_and_null_space(&xc);
                (lcm.fit.beta_vector().component_mul(&scale), null)
            }
            None => (DVector::zeros(p), DMatrix::identity(p, p)),
        };
        let signs = d.signs();
        let oriented = DMatrix::from_fn(report.problematic.len(), p, |r, c| {
            let i = report.problematic[r];
            signs[i] * xs[(i, c)]
        });
        let rows = &oriented * &null;
        let offset = &oriented * &beta0;
        let dir_scaled = direction.component_mul(&scale);
        let dir_gamma = null.transpose() * dir_scaled;
        let mut prob = Self {
            rows,
            offset,
            start: DVector::zeros(null.ncols()),
            log_alpha: alpha.ln(),
            alpha,
        };
        if prob.rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite scaled design".into()));
        }
        let margins = &prob.rows * &dir_gamma;
        if margins.iter().any(|&m| m <= 0.0) {
            return Err(Error::DetectionFailed(
                "recession direction is not strict on every problematic point".into(),
            ));
        }
        let mut t = 1.0 / margins.min();
        let mut found = false;
        for _ in 0..200 {
            let g = &dir_gamma * t;
            if prob.value(&g) >= prob.log_alpha {
                prob.start = g;
                found = true;
                break;
            }
            t *= 2.0;
        }
        if !found {
            return Err(Error::NonConvergence(
                "no coefficient vector reaches the likelihood bound along the recession direction"
                    .into(),
            ));
        }
        Ok(prob)
    }

    fn value(&self, gamma: &DVector<f64>) -> f64 {
        (&self.offset + &self.rows * gamma)
            .iter()
            .map(|&e| log_sigmoid(e))
            .sum()
    }

    /// Smallest oriented predictor `tau` for local point `j` with the bound
    /// satisfied, and the log-likelihood attained there.
    fn extreme(&self, j: usize, config: &OneSidedConfig) -> Result<(f64, f64)> {
        let u = self.rows.row(j).transpose();
        let uu = u.norm_squared();
        if uu == 0.0 {
            return Err(Error::Domain(
                "problematic point has no free coordinate".into(),
            ));
        }
        let q = u.len();
        let (_, m) = linalg::row_and_null_space(&DMatrix::from_row_slice(1, q, u.as_slice()));
        let tau_of = |g: &DVector<f64>| self.offset[j] + u.dot(g);
        let mut best = self.start.clone();
        let mut hi = tau_of(&best);
        let mut lo = logit(self.alpha);
        if hi <= lo {
            return Err(Error::NonConvergence("infeasible starting bracket".into()));
        }
        let slice = |tau: f64, near: &DVector<f64>, target: Option<f64>| {
            let gp = &u * ((tau - self.offset[j]) / uu);
            let off = &self.offset + &self.rows * &gp;
            let z = &self.rows * &m;
            let d0 = m.transpose() * (near - &gp);
            let (val, delta) = maximize_slice(&off, &z, d0, target, config.newton_iter);
            (val, gp + &m * delta)
        };
        for _ in 0..config.max_bisections {
            if hi - lo <= config.bracket_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (val, g) = slice(mid, &best, Some(self.log_alpha));
            if val >= self.log_alpha {
                hi = mid;
                best = g;
            } else {
                lo = mid;
            }
        }
        let (val, _) = slice(hi, &best, None);
        Ok((hi, val))
    }
}

/// Maximizes `sum log_sigmoid(off + z delta)` by damped Newton, stopping
/// early once `target` is reached.
fn maximize_slice(
    off: &DVector<f64>,
    z: &DMatrix<f64>,
    mut delta: DVector<f64>,
    target: Option<f64>,
    max_iter: usize,
) -> (f64, DVector<f64>) {
    let f = |d: &DVector<f64>| -> f64 { (off + z * d).iter().map(|&e| log_sigmoid(e)).sum() };
    let mut val = f(&delta);
    if z.ncols() == 0 {
        return (val, delta);
    }
    for _ in 0..max_iter {
        if target.is_some_and(|t| val >= t) {
            break;
        }
        let eta = off + z * &delta;
        let resid = eta.map(|e| sigmoid(-e));
        let grad = z.transpose() * &resid;
        if grad.norm() < 1e-13 {
            break;
        }
        let w = eta.iter().map(|&e| sigmoid(e) * sigmoid(-e));
        let h = crate::model::weighted_gram(z, w);
        let step = linalg::solve_spd(&h, &grad, 1e-12).unwrap_or_else(|| grad.clone());
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-14 {
            let cand = &delta + &step * t;
            let v = f(&cand);
            if v >= val + 1e-4 * t * slope {
                let gain = v - val;
                delta = cand;
                val = v;
                accepted = gain > 1e-15 * val.abs().max(1.0);
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (val, delta)
}

/// Two-sided delta-method intervals `logistic(theta +- z se)` for every row of
/// `d`, using the Fisher information at a converged fit.
pub fn wald_ci(fit: &FitResult, d: &Dataset, alpha: f64) -> Result<IntervalSet> {
    if !fit.converged {
        return Err(Error::Precondition(
            "Wald intervals need a converged fit".into(),
        ));
    }
    let rows: Vec<usize> = (0..d.n()).collect();
    wald_on(d.x(), d.y(), &fit.beta_vector(), &rows, alpha)
}

fn wald_on(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    index: &[usize],
    alpha: f64,
) -> Result<IntervalSet> {
    let z = critical_value(alpha)?;
    let info = fisher_unchecked(x, beta);
    let cov = linalg::spd_inverse(&info).ok_or_else(|| {
        let eig = info.clone().symmetric_eigen();
        let k = eig.eigenvalues.imin();
        Error::SingularFisher {
            direction: eig.eigenvectors.column(k).iter().copied().collect(),
        }
    })?;
    let eta = x * beta;
    let records = (0..x.nrows())
        .map(|i| {
            let xi = x.row(i).transpose();
            let se = (xi.dot(&(&cov * &xi))).max(0.0).sqrt();
            IntervalRecord {
                index: index[i],
                y: y[i],
                estimate: sigmoid(eta[i]),
                lower: sigmoid(eta[i] - z * se),
                upper: sigmoid(eta[i] + z * se),
                side: Side::TwoSided,
                alpha,
                constraint_loglik: None,
            }
        })
        .collect();
    Ok(IntervalSet {
        alpha,
        records,
        failures: Vec::new(),
    })
}

/// Wald intervals for the LCM rows, computed in the LCM's identifiable
/// coordinates and indexed like the full dataset.
pub fn lcm_wald_ci(lcm: &Lcm, alpha: f64) -> Result<IntervalSet> {
    match &lcm.reduced {
        Some((reduced, fit)) => wald_on(
            reduced.x(),
            reduced.y(),
            &fit.beta_vector(),
            &lcm.rows,
            alpha,
        ),
        None => {
            check_alpha(alpha)?;
            let records = lcm
                .rows
                .iter()
                .enumerate()
                .map(|(k, &i)| IntervalRecord {
                    index: i,
                    y: lcm.fit.pihat[k].round(),
                    estimate: 0.5,
                    lower: 0.5,
                    upper: 0.5,
                    side: Side::TwoSided,
                    alpha,
                    constraint_loglik: None,
                })
                .collect();
            Ok(IntervalSet {
                alpha,
                records,
                failures: Vec::new(),
            })
        }
    }
}

/// Intervals for every observation: one-sided on `I`, Wald elsewhere.
pub fn mean_value_intervals(
    d: &Dataset,
    completion: &CompletionFit,
    alpha: f64,
) -> Result<IntervalSet> {
    let report = &completion.report;
    match report.kind {
        SeparationKind::None => {
            let fit = completion.mle.as_ref().ok_or_else(|| {
                Error::Precondition("completion without separation carries no MLE".into())
            })?;
            wald_ci(fit, d, alpha)
        }
        SeparationKind::Complete => one_sided_ci(d, report, alpha),
        SeparationKind::QuasiComplete => {
            let one = one_sided_ci(d, report, alpha)?;
            let lcm = report.lcm.as_ref().expect("quasi report carries an LCM");
            let mut two = lcm_wald_ci(lcm, alpha)?;
            for r in &mut two.records {
                r.y = d.y()[r.index];
            }
            Ok(one.merge(two))
        }
    }
}

/// Wilson score interval around `pi_hat` with effective count `n_eff`.
pub fn wilson_interval(pi_hat: f64, n_eff: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&pi_hat) {
        return Err(Error::Domain(format!(
            "probability must lie in [0, 1], got {pi_hat}"
        )));
    }
    if !n_eff.is_finite() || n_eff <= 0.0 {
        return Err(Error::Domain(format!(
            "effective count must be positive, got {n_eff}"
        )));
    }
    let z = critical_value(alpha)?;
    let z2n = z * z / n_eff;
    let center = (pi_hat + z2n / 2.0) / (1.0 + z2n);
    let half =
        z / (1.0 + z2n) * (pi_hat * (1.0 - pi_hat) / n_eff + z * z / (4.0 * n_eff * n_eff)).sqrt();
    let lower = if pi_hat == 0.0 {
        0.0
    } else {
        (center - half).clamp(0.0, 1.0)
    };
    let upper = if pi_hat == 1.0 {
        1.0
    } else {
        (center + half).clamp(0.0, 1.0)
    };
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::scenario::{builtin_scenario, ScenarioName};
    use crate::model::{fit_irls, FitConfig};
    use crate::separation::detect;

    #[test]
    fn wilson_closed_form() {
        let (lo, hi) = wilson_interval(0.0, 10.0, 0.05).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-3);
        let (lo, hi) = wilson_interval(0.5, 10.0, 0.05).unwrap();
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(wilson_interval(1.2, 10.0, 0.05).is_err());
    }

    #[test]
    fn wald_intercept_only() {
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        let rows = vec![vec![]; 10];
        let d = Dataset::from_rows(&rows, &y, &[], true).unwrap();
        let fit = fit_irls(&d, &FitConfig::default()).unwrap();
        let set = wald_ci(&fit, &d, 0.05).unwrap();
        let r = &set.records[0];
        assert!((r.lower - 0.2245).abs() < 1e-4, "{r:?}");
        assert!((r.upper - 0.7755).abs() < 1e-4);
        let (a, b) = (logit(r.lower), logit(r.upper));
        assert!((a + b).abs() < 1e-10);
    }

    #[test]
    fn complete_geometry() {
        let d = builtin_scenario(ScenarioName::Complete).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        let set = one_sided_ci(&d, &rep, 0.05).unwrap();
        assert!(set.failures.is_empty());
        let len: Vec<f64> = set.records.iter().map(IntervalRecord::length).collect();
        assert!(
            (len[3] - 0.95).abs() < 1e-6 && (len[4] - 0.95).abs() < 1e-6,
            "{len:?}"
        );
        assert!((set.mean_length().unwrap() - 0.550).abs() < 0.02);
        for r in &set.records {
            assert!((r.constraint_loglik.unwrap() - 0.05f64.ln()).abs() <= 1e-6);
        }
    }

    #[test]
    fn quasi_lengths() {
        let d = builtin_scenario(ScenarioName::Quasi).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        let set = one_sided_ci(&d, &rep, 0.05).unwrap();
        assert_eq!(set.records.len(), 8);
        assert!((set.mean_length().unwrap() - 0.308).abs() < 0.02);
    }

    #[test]
    fn quadratic_lengths_and_activity() {
        let d = builtin_scenario(ScenarioName::Quadratic).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        let set = one_sided_ci(&d, &rep, 0.05).unwrap();
        assert_eq!(set.records.len(), 30);
        assert!(
            (set.mean_length().unwrap() - 0.199).abs() < 0.02,
            "{:?}",
            set.mean_length()
        );
        for r in &set.records {
            assert!(
                (r.constraint_loglik.unwrap() - 0.05f64.ln()).abs() <= 1e-6,
                "{r:?}"
            );
        }
    }

    #[test]
    fn rejects_unseparated_data() {
        let d = Dataset::from_rows(
            &[vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            &[0.0, 1.0, 0.0, 1.0],
            &["z"],
            true,
        )
        .unwrap();
        let rep = detect(&d, 1e-7).unwrap();
        assert!(one_sided_ci(&d, &rep, 0.05).is_err());
        assert!(one_sided_ci(&d, &rep, 1.5).is_err());
    }
}
