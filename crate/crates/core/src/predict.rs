//! Prediction at new points when the training data are separated.
//!
//! The new point is appended twice, once with each possible outcome. Each
//! augmented dataset gets a separation-aware fit, the two fits are weighted by
//! AICc and the averaged probability is reported with a Wilson interval and a
//! label from the accuracy-optimal cutoff.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::inference::wilson_interval;
use crate::model::{sigmoid, FitResult};
use crate::separation::{fit_completion, CompletionFit, DetectConfig, SeparationKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub loglik_sup: f64,
    pub k: usize,
    pub n_aug: usize,
    /// `+inf` when `n_aug <= k + 1`.
    pub aicc: f64,
}

/// Small-sample corrected AIC.
pub fn aicc(loglik_sup: f64, k: usize, n_aug: usize) -> Result<ModelScore> {
    if k == 0 {
        return Err(Error::Domain("AICc needs at least one parameter".into()));
    }
    let kf = k as f64;
    let aicc = if n_aug > k + 1 {
        -2.0 * loglik_sup + 2.0 * kf + 2.0 * kf * (kf + 1.0) / (n_aug as f64 - kf - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(ModelScore {
        loglik_sup,
        k,
        n_aug,
        aicc,
    })
}

/// Akaike weights for two information criteria.
pub fn akaike_weights(ic0: f64, ic1: f64) -> (f64, f64) {
    let m = ic0.min(ic1);
    if !m.is_finite() {
        return (0.5, 0.5);
    }
    let e0 = (-(ic0 - m) / 2.0).exp();
    let e1 = (-(ic1 - m) / 2.0).exp();
    let s = e0 + e1;
    (e0 / s, e1 / s)
}

/// Threshold maximizing the accuracy of `pi >= C` against `y`.
///
/// Candidates are midpoints between consecutive distinct values of
/// `{0} + pi_hats + {1}` together with the prevalence of `y`. Ties go to the
/// candidate nearest the prevalence, then to the smaller threshold.
pub fn optimal_cutoff(pi_hats: &[f64], y: &[f64]) -> Result<f64> {
    if pi_hats.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: pi_hats.len(),
        });
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::Precondition(
            "optimal cutoff needs both outcome classes".into(),
        ));
    }
    if let Some(p) = pi_hats.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let prevalence = ones as f64 / y.len() as f64;
    let mut values: Vec<f64> = pi_hats.to_vec();
    values.extend([0.0, 1.0]);
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let mut candidates: Vec<f64> = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    candidates.push(prevalence);

    let correct = |c: f64| {
        pi_hats
            .iter()
            .zip(y)
            .filter(|(&p, &t)| (p >= c) == (t == 1.0))
            .count()
    };
    let mut best = (0usize, f64::INFINITY, f64::INFINITY);
    for c in candidates {
        let hits = correct(c);
        let dist = (c - prevalence).abs();
        let better =
            hits > best.0 || (hits == best.0 && (dist < best.1 || (dist == best.1 && c < best.2)));
        if better {
            best = (hits, dist, c);
        }
    }
    Ok(best.2)
}

/// Plain MLE probability `logistic(x_new' beta)`.
pub fn predict_plain(fit: &FitResult, x_new: &DVector<f64>) -> Result<f64> {
    if fit.diverged || !fit.converged {
        return Err(Error::Precondition(
            "fit has no finite MLE (separation); use predict_point".into(),
        ));
    }
    check_row(x_new, fit.beta.len())?;
    Ok(sigmoid(fit.beta_vector().dot(x_new)))
}

fn check_row(x_new: &DVector<f64>, p: usize) -> Result<()> {
    if x_new.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x_new.len(),
        });
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("new point has non-finite entries".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct PredictConfig {
    pub detect: DetectConfig,
    pub alpha: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            detect: DetectConfig::default(),
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub x_new: Vec<f64>,
    pub pi0: f64,
    pub pi1: f64,
    pub w0: f64,
    pub w1: f64,
    pub pi_star: f64,
    pub interval: (f64, f64),
    pub label: u8,
    pub cutoff: f64,
    /// Set when the training data are not separated and the plain MLE was used.
    pub fallback: bool,
    pub score0: Option<ModelScore>,
    pub score1: Option<ModelScore>,
    pub kind0: Option<SeparationKind>,
    pub kind1: Option<SeparationKind>,
}

impl PredictionResult {
    pub fn interval_length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }
}

/// Model-averaged prediction at `x_new` from training data `d`.
pub fn predict_point(
    d: &Dataset,
    x_new: &DVector<f64>,
    config: &PredictConfig,
) -> Result<PredictionResult> {
    let training = fit_completion(d, &config.detect)?;
    predict_with_training(d, &training, x_new, config)
}

/// As [`predict_point`], reusing an existing fit of the training data.
pub fn predict_with_training(
    d: &Dataset,
    training: &CompletionFit,
    x_new: &DVector<f64>,
    config: &PredictConfig,
) -> Result<PredictionResult> {
    check_row(x_new, d.p())?;
    let y: Vec<f64> = d.y().iter().copied().collect();
    let cutoff = optimal_cutoff(&training.mean_values, &y).unwrap_or(0.5);
    let n_aug = d.n() + 1;

    if training.kind() == SeparationKind::None {
        let mle = training
            .mle
            .as_ref()
            .ok_or_else(|| Error::Precondition("unseparated training fit carries no MLE".into()))?;
        let pi = predict_plain(mle, x_new)?;
        return Ok(PredictionResult {
            x_new: x_new.iter().copied().collect(),
            pi0: pi,
            pi1: pi,
            w0: 0.5,
            w1: 0.5,
            pi_star: pi,
            interval: wilson_interval(pi, n_aug as f64, config.alpha)?,
            label: u8::from(pi >= cutoff),
            cutoff,
            fallback: true,
            score0: None,
            score1: None,
            kind0: None,
            kind1: None,
        });
    }

    let fit_side = |y_new: f64| -> Result<(f64, ModelScore, SeparationKind)> {
        let aug = d.augmented(x_new, y_new)?;
        let c = fit_completion(&aug, &config.detect)?;
        let score = aicc(c.loglik_sup, d.p(), n_aug)?;
        Ok((c.mean_values[d.n()], score, c.kind()))
    };
    let (r0, r1) = rayon::join(|| fit_side(0.0), || fit_side(1.0));
    let (pi0, pi1, w0, w1, s0, s1, k0, k1) = match (r0, r1) {
        (Ok((p0, s0, k0)), Ok((p1, s1, k1))) => {
            let (w0, w1) = akaike_weights(s0.aicc, s1.aicc);
            (p0, p1, w0, w1, Some(s0), Some(s1), Some(k0), Some(k1))
        }
        (Ok((p0, s0, k0)), Err(_)) => (p0, p0, 1.0, 0.0, Some(s0), None, Some(k0), None),
        (Err(_), Ok((p1, s1, k1))) => (p1, p1, 0.0, 1.0, None, Some(s1), None, Some(k1)),
        (Err(e0), Err(e1)) => {
            return Err(Error::AugmentedFits {
                fit0: e0.to_string(),
                fit1: e1.to_string(),
            })
        }
    };
    let pi_star = (w0 * pi0 + w1 * pi1).clamp(pi0.min(pi1), pi0.max(pi1));
    Ok(PredictionResult {
        x_new: x_new.iter().copied().collect(),
        pi0,
        pi1,
        w0,
        w1,
        pi_star,
        interval: wilson_interval(pi_star, n_aug as f64, config.alpha)?,
        label: u8::from(pi_star >= cutoff),
        cutoff,
        fallback: false,
        score0: s0,
        score1: s1,
        kind0: k0,
        kind1: k1,
    })
}
