//! In-sample and leave-one-out evaluation of the robust method and the
//! baselines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_baseline, BaselineFit, BaselineMethod};
use crate::bench::scenario::Scenario;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::inference::{mean_value_intervals, wilson_interval};
use crate::predict::{optimal_cutoff, predict_point, PredictConfig};
use crate::separation::{fit_completion, DetectConfig, SeparationKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Robust,
    Firth,
    Cauchy,
    Ols,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Robust, Method::Cauchy, Method::Firth, Method::Ols];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Robust => "robust",
            Method::Firth => "firth",
            Method::Cauchy => "cauchy",
            Method::Ols => "ols",
        }
    }

    fn baseline(&self) -> Option<BaselineMethod> {
        match self {
            Method::Robust => None,
            Method::Firth => Some(BaselineMethod::Firth),
            Method::Cauchy => Some(BaselineMethod::CauchyMap),
            Method::Ols => Some(BaselineMethod::Ols),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "robust" => Ok(Method::Robust),
            "firth" => Ok(Method::Firth),
            "cauchy" | "cauchy-map" => Ok(Method::Cauchy),
            "ols" | "linear" => Ok(Method::Ols),
            other => Err(Error::Precondition(format!("unknown method '{other}'"))),
        }
    }
}

/// One (scenario, method) cell of the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub method: Method,
    pub n: usize,
    pub in_sample_accuracy: Option<f64>,
    pub in_sample_correct: Option<usize>,
    pub mean_ci_length: Option<f64>,
    pub loocv_accuracy: Option<f64>,
    pub loocv_correct: Option<usize>,
    pub loocv_folds: Option<usize>,
    pub mean_pi_length: Option<f64>,
    pub inference_seconds: Option<f64>,
    pub cost_seconds: Option<f64>,
    pub errors: Vec<String>,
}

impl BenchRow {
    fn empty(scenario: &Scenario, method: Method) -> Self {
        Self {
            scenario: scenario.name.to_string(),
            method,
            n: scenario.dataset.n(),
            in_sample_accuracy: None,
            in_sample_correct: None,
            mean_ci_length: None,
            loocv_accuracy: None,
            loocv_correct: None,
            loocv_folds: None,
            mean_pi_length: None,
            inference_seconds: None,
            cost_seconds: None,
            errors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMetadata {
    pub seed: u64,
    pub alpha: f64,
    pub tol_sep: f64,
    pub grad_tol: f64,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub metadata: BenchMetadata,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, scenario: &str, method: Method) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.method == method)
    }

    /// Copy with every timing field cleared, for reproducibility checks.
    pub fn without_costs(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.cost_seconds = None;
            row.inference_seconds = None;
        }
        r
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub alpha: f64,
    pub seed: u64,
    pub detect: DetectConfig,
    pub inference: bool,
    pub loocv: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            seed: 0,
            detect: DetectConfig::default(),
            inference: true,
            loocv: true,
        }
    }
}

fn accuracy(pi: &[f64], y: &[f64], cutoff: f64) -> usize {
    pi.iter()
        .zip(y)
        .filter(|(&p, &t)| (p >= cutoff) == (t == 1.0))
        .count()
}

fn percent(correct: usize, n: usize) -> f64 {
    100.0 * correct as f64 / n as f64
}

fn y_vec(d: &Dataset) -> Vec<f64> {
    d.y().iter().copied().collect()
}

/// Classification threshold used with a baseline's fitted values.
pub fn baseline_cutoff(fit: &BaselineFit, y: &[f64]) -> f64 {
    match fit.method {
        BaselineMethod::Ols => 0.5,
        _ => optimal_cutoff(&fit.pihat, y).unwrap_or(0.5),
    }
}

/// Fits every method on the full data and records in-sample accuracy and
/// mean interval length over the problematic points.
pub fn run_inference_bench(
    s: &Scenario,
    methods: &[Method],
    config: &BenchConfig,
) -> Vec<BenchRow> {
    let d = &s.dataset;
    let y = y_vec(d);
    let detected = fit_completion(d, &config.detect);
    methods
        .iter()
        .map(|&m| {
            let mut row = BenchRow::empty(s, m);
            let start = Instant::now();
            let outcome = (|| -> Result<(usize, Option<f64>)> {
                let completion = detected
                    .as_ref()
                    .map_err(|e| Error::Precondition(e.to_string()))?;
                let problematic: Vec<usize> = if completion.kind() == SeparationKind::None {
                    (0..d.n()).collect()
                } else {
                    completion.report.problematic.clone()
                };
                match m.baseline() {
                    None => {
                        let cutoff = optimal_cutoff(&completion.mean_values, &y)?;
                        let correct = accuracy(&completion.mean_values, &y, cutoff);
                        let set = mean_value_intervals(d, completion, config.alpha)?;
                        for f in &set.failures {
                            row.errors
                                .push(format!("interval at row {}: {}", f.index, f.message));
                        }
                        let lens: Vec<f64> = set
                            .records
                            .iter()
                            .filter(|r| problematic.contains(&r.index))
                            .map(|r| r.length())
                            .collect();
                        Ok((correct, mean(&lens)))
                    }
                    Some(b) => {
                        let fit = fit_baseline(b, d)?;
                        let correct = accuracy(&fit.pihat, &y, baseline_cutoff(&fit, &y));
                        let lens = problematic
                            .iter()
                            .map(|&i| {
                                wilson_interval(fit.pihat[i], d.n() as f64, config.alpha)
                                    .map(|(a, b)| b - a)
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        Ok((correct, mean(&lens)))
                    }
                }
            })();
            match outcome {
                Ok((correct, len)) => {
                    row.in_sample_correct = Some(correct);
                    row.in_sample_accuracy = Some(percent(correct, d.n()));
                    row.mean_ci_length = len;
                }
                Err(e) => row.errors.push(format!("inference: {e}")),
            }
            row.inference_seconds = Some(start.elapsed().as_secs_f64());
            row
        })
        .collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Result of one held-out point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub y: f64,
    pub probability: Option<f64>,
    pub label: Option<u8>,
    pub interval_length: Option<f64>,
    pub error: Option<String>,
}

impl Fold {
    pub fn correct(&self) -> bool {
        self.label.is_some_and(|l| f64::from(l) == self.y)
    }
}

fn run_fold(d: &Dataset, i: usize, method: Method, config: &BenchConfig) -> Fold {
    let yi = d.y()[i];
    let result = (|| -> Result<(f64, u8, f64)> {
        let train = d.without(i)?;
        let x_new = d.row(i);
        match method.baseline() {
            None => {
                let pc = PredictConfig {
                    detect: config.detect,
                    alpha: config.alpha,
                };
                let r = predict_point(&train, &x_new, &pc)?;
                Ok((r.pi_star, r.label, r.interval_length()))
            }
            Some(b) => {
                let fit = fit_baseline(b, &train)?;
                let cutoff = baseline_cutoff(&fit, &y_vec(&train));
                let p = fit.predict(&x_new)?;
                let (lo, hi) = wilson_interval(p, train.n() as f64, config.alpha)?;
                Ok((p, u8::from(p >= cutoff), hi - lo))
            }
        }
    })();
    match result {
        Ok((p, label, len)) => Fold {
            index: i,
            y: yi,
            probability: Some(p),
            label: Some(label),
            interval_length: Some(len),
            error: None,
        },
        Err(e) => Fold {
            index: i,
            y: yi,
            probability: None,
            label: None,
            interval_length: None,
            error: Some(e.to_string()),
        },
    }
}

/// Leave-one-out folds for one method, in index order.
pub fn loocv_folds(d: &Dataset, method: Method, config: &BenchConfig) -> Vec<Fold> {
    (0..d.n())
        .into_par_iter()
        .map(|i| run_fold(d, i, method, config))
        .collect()
}

/// Leave-one-out accuracy, mean prediction-interval length and cost.
pub fn run_prediction_bench(
    s: &Scenario,
    methods: &[Method],
    config: &BenchConfig,
) -> Vec<BenchRow> {
    methods
        .iter()
        .map(|&m| {
            let mut row = BenchRow::empty(s, m);
            let start = Instant::now();
            let folds = loocv_folds(&s.dataset, m, config);
            row.cost_seconds = Some(start.elapsed().as_secs_f64());
            let correct = folds.iter().filter(|f| f.correct()).count();
            row.loocv_folds = Some(folds.len());
            row.loocv_correct = Some(correct);
            row.loocv_accuracy = Some(percent(correct, folds.len()));
            let lens: Vec<f64> = folds.iter().filter_map(|f| f.interval_length).collect();
            row.mean_pi_length = mean(&lens);
            for f in &folds {
                if let Some(e) = &f.error {
                    row.errors.push(format!("fold {}: {e}", f.index));
                }
            }
            row
        })
        .collect()
}

/// Runs the requested parts of the benchmark over every scenario.
pub fn run_bench(scenarios: &[Scenario], methods: &[Method], config: &BenchConfig) -> BenchReport {
    let mut rows = Vec::new();
    for s in scenarios {
        let inf = if config.inference {
            run_inference_bench(s, methods, config)
        } else {
            methods.iter().map(|&m| BenchRow::empty(s, m)).collect()
        };
        let pred = if config.loocv {
            run_prediction_bench(s, methods, config)
        } else {
            Vec::new()
        };
        for (k, mut row) in inf.into_iter().enumerate() {
            if let Some(p) = pred.get(k) {
                row.loocv_accuracy = p.loocv_accuracy;
                row.loocv_correct = p.loocv_correct;
                row.loocv_folds = p.loocv_folds;
                row.mean_pi_length = p.mean_pi_length;
                row.cost_seconds = p.cost_seconds;
                row.errors.extend(p.errors.iter().cloned());
            }
            rows.push(row);
        }
    }
    BenchReport {
        schema_version: SCHEMA_VERSION,
        metadata: BenchMetadata {
            seed: config.seed,
            alpha: config.alpha,
            tol_sep: config.detect.tol_sep,
            grad_tol: config.detect.fit.grad_tol,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
    }
}
