//! Separation diagnosis.
//!
//! A dataset is separated when some direction `b` satisfies
//! `(2 y_i - 1) x_i' b >= 0` for every row with strict inequality on at least
//! one row. The rows that can be made strict at once form the problematic set
//! `I`; along `b` their fitted probabilities are driven to 0 or 1 while the
//! remaining rows define the limiting conditional model (LCM).
//!
//! Detection solves a box-bounded linear program, re-solving with the rows
//! already found held non-negative until no new row can be made strict, so the
//! reported `I` is the maximal one even when the first optimum sits on a
//! degenerate vertex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LinearProgram, LpOptions, Relation};
use crate::model::{fit_irls, FitConfig, FitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationKind {
    None,
    QuasiComplete,
    Complete,
}

impl SeparationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeparationKind::None => "none",
            SeparationKind::QuasiComplete => "quasi-complete",
            SeparationKind::Complete => "complete",
        }
    }
}

/// Solution of the first detection LP, in original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub objective: f64,
    pub b: Vec<f64>,
    pub slacks: Vec<f64>,
}

/// The limiting conditional model: an ordinary logistic fit on the rows
/// outside `I`, restricted to the row space of their design.
#[derive(Debug, Clone)]
pub struct Lcm {
    /// Row indices (into the full dataset) the LCM is fitted on.
    pub rows: Vec<usize>,
    /// Fit in full coordinates; `pihat` is indexed like `rows`.
    pub fit: FitResult,
    /// Orthonormal basis (p x r) of the identifiable coefficient subspace.
    pub basis: DMatrix<f64>,
    /// Orthonormal basis (p x (p - r)) of the directions the LCM cannot see.
    pub null_basis: DMatrix<f64>,
    /// The LCM rows expressed in `basis` coordinates; `None` when the LCM
    /// design is identically zero and every LCM probability is one half.
    pub reduced: Option<(Dataset, FitResult)>,
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub kind: SeparationKind,
    /// Recession direction in original coordinates.
    pub direction: Option<Vec<f64>>,
    /// Problematic rows, ascending.
    pub problematic: Vec<usize>,
    pub lcm: Option<Lcm>,
    pub lp: Option<LpSolution>,
}

impl SeparationReport {
    fn none(lp: Option<LpSolution>) -> Self {
        Self {
            kind: SeparationKind::None,
            direction: None,
            problematic: Vec::new(),
            lcm: None,
            lp,
        }
    }

    pub fn is_separated(&self) -> bool {
        self.kind != SeparationKind::None
    }

    pub fn direction_vector(&self) -> Option<DVector<f64>> {
        self.direction
            .as_ref()
            .map(|d| DVector::from_column_slice(d))
    }

    /// Membership mask for `I`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.problematic {
            m[i] = true;
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DetectConfig {
    pub tol_sep: f64,
    pub fit: FitConfig,
    pub lp: LpOptions,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            tol_sep: 1e-7,
            fit: FitConfig::default(),
            lp: LpOptions::default(),
        }
    }
}

/// Detects separation with tolerance `tol_sep` and default fitting options.
pub fn detect(d: &Dataset, tol_sep: f64) -> Result<SeparationReport> {
    detect_with(
        d,
        &DetectConfig {
            tol_sep,
            ..DetectConfig::default()
        },
    )
}

pub fn detect_with(d: &Dataset, config: &DetectConfig) -> Result<SeparationReport> {
    let mut report = detect_support(d, config)?;
    if report.kind == SeparationKind::QuasiComplete {
        report.lcm = Some(fit_lcm(d, &report, &config.fit)?);
    }
    Ok(report)
}

/// Oriented, column-scaled rows `(2 y_i - 1) x_i / scale`.
fn oriented_rows(d: &Dataset) -> (DMatrix<f64>, DVector<f64>) {
    let (xs, scale) = linalg::column_max_scale(d.x());
    let s = d.signs();
    let mut a = xs;
    for (i, mut row) in a.row_iter_mut().enumerate() {
        row *= s[i];
    }
    (a, scale)
}

fn row_dot(a: &DMatrix<f64>, i: usize, b: &[f64]) -> f64 {
    a.row(i).iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LP-based detection of `I` and the recession direction, without the LCM.
fn detect_support(d: &Dataset, config: &DetectConfig) -> Result<SeparationReport> {
    let n = d.n();
    let p = d.p();
    let tol = config.tol_sep;
    let (a, scale) = oriented_rows(d);

    let mut found = vec![false; n];
    let mut first: Option<LpSolution> = None;

    for _ in 0..=n {
        let free: Vec<usize> = (0..n).filter(|&i| !found[i]).collect();
        if free.is_empty() {
            break;
        }
        // vars: b+ (p), b- (p), s_i for free rows
        let nv = 2 * p + free.len();
        let mut objective = vec![0.0; nv];
        for c in objective.iter_mut().skip(2 * p) {
            *c = 1.0;
        }
        let mut prog = LinearProgram::new(objective, vec![0.0; nv], vec![1.0; nv]);
        let mut slot = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            slot[i] = 2 * p + k;
        }
        for i in 0..n {
            let mut row = vec![0.0; nv];
            for j in 0..p {
                row[j] = -a[(i, j)];
                row[p + j] = a[(i, j)];
            }
            if slot[i] != usize::MAX {
                row[slot[i]] = 1.0;
            }
            prog.add(row, Relation::Le, 0.0);
        }
        let out =
            lp::solve(&prog, &config.lp).map_err(|e| Error::DetectionFailed(e.to_string()))?;
        if prog.max_violation(&out.x) > 1e-7 {
            return Err(Error::DetectionFailed(
                "LP solution violates its constraints".into(),
            ));
        }
        let b: Vec<f64> = (0..p).map(|j| out.x[j] - out.x[p + j]).collect();

        if first.is_none() {
            let mut slacks = vec![0.0; n];
            for &i in &free {
                slacks[i] = out.x[slot[i]];
            }
            first = Some(LpSolution {
                objective: out.objective,
                b: b.iter().zip(scale.iter()).map(|(v, s)| v / s).collect(),
                slacks,
            });
        }
        if out.objective <= tol {
            break;
        }
        let mut added = false;
        for &i in &free {
            if row_dot(&a, i, &b) > tol {
                found[i] = true;
                added = true;
            }
        }
        if !added {
            break;
        }
    }

    let problematic: Vec<usize> = (0..n).filter(|&i| found[i]).collect();
    if problematic.is_empty() {
        return Ok(SeparationReport::none(first));
    }

    let dir_scaled = max_margin_direction(&a, &found, config)?;
    let direction: Vec<f64> = dir_scaled
        .iter()
        .zip(scale.iter())
        .map(|(v, s)| v / s)
        .collect();
    let kind = if problematic.len() == n {
        SeparationKind::Complete
    } else {
        SeparationKind::QuasiComplete
    };
    Ok(SeparationReport {
        kind,
        direction: Some(direction),
        problematic,
        lcm: None,
        lp: first,
    })
}

/// Among directions vanishing on rows outside `I`, the one maximizing the
/// smallest oriented margin on `I` (scaled coordinates).
fn max_margin_direction(
    a: &DMatrix<f64>,
    in_set: &[bool],
    config: &DetectConfig,
) -> Result<Vec<f64>> {
    let (n, p) = a.shape();
    let nv = 2 * p + 1;
    let mut objective = vec![0.0; nv];
    objective[2 * p] = 1.0;
    let mut prog = LinearProgram::new(objective, vec![0.0; nv], vec![1.0; nv]);
    for i in 0..n {
        let mut row = vec![0.0; nv];
        for j in 0..p {
            row[j] = a[(i, j)];
            row[p + j] = -a[(i, j)];
        }
        if in_set[i] {
            for v in row.iter_mut() {
                *v = -*v;
            }
            row[2 * p] = 1.0;
            prog.add(row, Relation::Le, 0.0);
        } else {
            prog.add(row, Relation::Eq, 0.0);
        }
    }
    let out = lp::solve(&prog, &config.lp).map_err(|e| Error::DetectionFailed(e.to_string()))?;
    if out.objective <= config.tol_sep {
        return Err(Error::DetectionFailed(
            "no direction is strict on the detected set while vanishing elsewhere".into(),
        ));
    }
    Ok((0..p).map(|j| out.x[j] - out.x[p + j]).collect())
}

/// Fits the limiting conditional model on the complement of `I`.
pub fn fit_lcm(d: &Dataset, report: &SeparationReport, config: &FitConfig) -> Result<Lcm> {
    if report.kind != SeparationKind::QuasiComplete {
        return Err(Error::Precondition(format!(
            "limiting conditional model requires quasi-complete separation, got {}",
            report.kind.as_str()
        )));
    }
    let mask = report.mask(d.n());
    let rows: Vec<usize> = (0..d.n()).filter(|&i| !mask[i]).collect();
    let sub = d.subset(&rows)?;

    // The complement of a maximal I is never separated; check anyway.
    let nested = detect_support(&sub, &DetectConfig::default())?;
    if nested.kind != SeparationKind::None {
        return Err(Error::DetectionFailed(format!(
            "limiting conditional model rows are still separated ({} rows)",
            nested.problematic.len()
        )));
    }

    let (basis, null_basis) = linalg::row_and_null_space(sub.x());
    if basis.ncols() == 0 {
        let fit = FitResult::at(sub.x(), sub.y(), DVector::zeros(d.p()))?;
        return Ok(Lcm {
            rows,
            fit,
            basis,
            null_basis,
            reduced: None,
        });
    }
    let z = sub.x() * &basis;
    let names = (0..basis.ncols()).map(|k| format!("lcm{k}")).collect();
    let reduced = sub.with_design(z, names)?;
    let reduced_fit = fit_irls(&reduced, config)?;
    if !reduced_fit.converged {
        return Err(Error::NonConvergence(format!(
            "limiting conditional model did not converge after {} iterations (gradient norm {:.3e})",
            reduced_fit.iterations, reduced_fit.gradient_norm
        )));
    }
    let beta = &basis * reduced_fit.beta_vector();
    let mut fit = FitResult::at(sub.x(), sub.y(), beta)?;
    fit.iterations = reduced_fit.iterations;
    fit.converged = reduced_fit.converged;
    fit.loglik_trace = reduced_fit.loglik_trace.clone();
    Ok(Lcm {
        rows,
        fit,
        basis,
        null_basis,
        reduced: Some((reduced, reduced_fit)),
    })
}

/// Maximum-likelihood estimates in the completion: mean-value estimates for
/// every row plus the supremum of the log-likelihood.
#[derive(Debug, Clone)]
pub struct CompletionFit {
    pub report: SeparationReport,
    /// Present when the ordinary MLE exists.
    pub mle: Option<FitResult>,
    pub mean_values: Vec<f64>,
    pub loglik_sup: f64,
}

impl CompletionFit {
    pub fn kind(&self) -> SeparationKind {
        self.report.kind
    }
}

/// Separation-aware fit: ordinary MLE when it exists, otherwise the LCM with
/// problematic rows fixed at their observed outcome.
pub fn fit_completion(d: &Dataset, config: &DetectConfig) -> Result<CompletionFit> {
    let report = detect_with(d, config)?;
    match report.kind {
        SeparationKind::None => {
            let fit = fit_irls(d, &config.fit)?;
            if !fit.converged {
                return Err(Error::NonConvergence(format!(
                    "no separation detected but IRLS did not converge (iterations {}, diverged {})",
                    fit.iterations, fit.diverged
                )));
            }
            Ok(CompletionFit {
                mean_values: fit.pihat.clone(),
                loglik_sup: fit.loglik,
                mle: Some(fit),
                report,
            })
        }
        SeparationKind::Complete => Ok(CompletionFit {
            mean_values: d.y().iter().copied().collect(),
            loglik_sup: 0.0,
            mle: None,
            report,
        }),
        SeparationKind::QuasiComplete => {
            let lcm = report.lcm.as_ref().expect("quasi report carries an LCM");
            let mut mean_values: Vec<f64> = d.y().iter().copied().collect();
            for (k, &i) in lcm.rows.iter().enumerate() {
                mean_values[i] = lcm.fit.pihat[k];
            }
            let loglik_sup = lcm.fit.loglik;
            Ok(CompletionFit {
                mean_values,
                loglik_sup,
                mle: None,
                report,
            })
        }
    }
}

/// Exhaustive oracle for small problems (`p <= 3`, `n <= 40`).
///
/// The cone of valid directions is pointed once restricted to the row space
/// of the oriented design, so its extreme rays (null vectors of `r - 1` rows)
/// generate it and the union of their supports is the maximal `I`.
pub fn detect_bruteforce(d: &Dataset) -> Result<SeparationReport> {
    let (n, p) = (d.n(), d.p());
    if p > 3 || n > 40 {
        return Err(Error::Precondition(format!(
            "brute-force detection supports p <= 3 and n <= 40, got p = {p}, n = {n}"
        )));
    }
    let (a, scale) = oriented_rows(d);
    let (q, _) = linalg::row_and_null_space(&a);
    let r = q.ncols();
    let ar = &a * &q;
    let row_norm = ar.row_iter().map(|row| row.norm()).fold(0.0f64, f64::max);

    let mut candidates: Vec<DVector<f64>> = Vec::new();
    match r {
        0 => {}
        1 => {
            candidates.push(DVector::from_element(1, 1.0));
            candidates.push(DVector::from_element(1, -1.0));
        }
        _ => {
            for subset in combinations(n, r - 1) {
                let m = ar.select_rows(&subset);
                let (_, null) = linalg::row_and_null_space(&m);
                if null.ncols() == 1 {
                    let v = null.column(0).into_owned();
                    candidates.push(-&v);
                    candidates.push(v);
                }
            }
            for j in 0..p {
                let mut e = DVector::zeros(p);
                e[j] = 1.0;
                let v = q.transpose() * e;
                if v.norm() > 1e-12 {
                    candidates.push(-&v);
                    candidates.push(v);
                }
            }
            if r == 2 {
                for k in 0..720 {
                    let ang = k as f64 * std::f64::consts::PI / 360.0;
                    candidates.push(DVector::from_vec(vec![ang.cos(), ang.sin()]));
                }
            }
        }
    }

    let tol = 1e-9 * row_norm.max(1.0);
    let mut found = vec![false; n];
    let mut sum = DVector::zeros(r);
    for v in &candidates {
        let v = v / v.norm();
        let margins = &ar * &v;
        if margins.iter().all(|&m| m >= -tol) && margins.iter().any(|&m| m > tol) {
            for i in 0..n {
                if margins[i] > tol {
                    found[i] = true;
                }
            }
            sum += v;
        }
    }

    let problematic: Vec<usize> = (0..n).filter(|&i| found[i]).collect();
    if problematic.is_empty() {
        return Ok(SeparationReport::none(None));
    }
    let dir_scaled = &q * sum;
    let direction = dir_scaled
        .iter()
        .zip(scale.iter())
        .map(|(v, s)| v / s)
        .collect();
    let kind = if problematic.len() == n {
        SeparationKind::Complete
    } else {
        SeparationKind::QuasiComplete
    };
    let mut report = SeparationReport {
        kind,
        direction: Some(direction),
        problematic,
        lcm: None,
        lp: None,
    };
    if kind == SeparationKind::QuasiComplete {
        report.lcm = Some(fit_lcm(d, &report, &FitConfig::default())?);
    }
    Ok(report)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::scenario::{builtin_scenario, ScenarioName};

    fn overlapping() -> Dataset {
        Dataset::from_rows(
            &[vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            &[0.0, 1.0, 0.0, 1.0],
            &["z"],
            true,
        )
        .unwrap()
    }

    #[test]
    fn complete_didactic() {
        let d = builtin_scenario(ScenarioName::Complete).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        assert_eq!(rep.kind, SeparationKind::Complete);
        assert_eq!(rep.problematic, (0..8).collect::<Vec<_>>());
        let b = rep.direction.unwrap();
        // proportional to (-50, 1), up to sign
        assert!((b[0] / b[1] + 50.0).abs() < 1e-6, "direction {b:?}");
        assert!(rep.lcm.is_none());
    }

    #[test]
    fn quasi_didactic() {
        let d = builtin_scenario(ScenarioName::Quasi).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        assert_eq!(rep.kind, SeparationKind::QuasiComplete);
        let z50: Vec<usize> = (0..d.n()).filter(|&i| d.x()[(i, 1)] == 50.0).collect();
        assert_eq!(rep.problematic.len(), 8);
        assert!(z50.iter().all(|i| !rep.problematic.contains(i)));
        let lcm = rep.lcm.as_ref().unwrap();
        assert_eq!(lcm.rows, z50);
        assert!(lcm.fit.pihat.iter().all(|&p| (p - 0.5).abs() < 1e-9));
        assert!((lcm.fit.loglik - 2.0 * 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn overlapping_has_no_separation() {
        let rep = detect(&overlapping(), 1e-7).unwrap();
        assert_eq!(rep.kind, SeparationKind::None);
        assert!(rep.problematic.is_empty());
        assert!(rep.direction.is_none());
        let bf = detect_bruteforce(&overlapping()).unwrap();
        assert_eq!(bf.kind, SeparationKind::None);
    }

    #[test]
    fn bruteforce_agrees_on_didactic_sets() {
        for name in [
            ScenarioName::Complete,
            ScenarioName::Quasi,
            ScenarioName::Quadratic,
        ] {
            let d = builtin_scenario(name).unwrap().dataset;
            let lp = detect(&d, 1e-7).unwrap();
            let bf = detect_bruteforce(&d).unwrap();
            assert_eq!(lp.kind, bf.kind, "{name:?}");
            assert_eq!(lp.problematic, bf.problematic, "{name:?}");
        }
        let quad = builtin_scenario(ScenarioName::Quadratic).unwrap().dataset;
        assert_eq!(
            detect_bruteforce(&quad).unwrap().kind,
            SeparationKind::Complete
        );
    }

    #[test]
    fn bruteforce_rejects_large_problems() {
        let rows: Vec<Vec<f64>> = (0..41).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..41).map(|i| (i % 2) as f64).collect();
        let d = Dataset::from_rows(&rows, &y, &["z"], true).unwrap();
        assert!(matches!(detect_bruteforce(&d), Err(Error::Precondition(_))));
    }

    #[test]
    fn lcm_requires_quasi() {
        let d = builtin_scenario(ScenarioName::Complete).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        assert!(fit_lcm(&d, &rep, &FitConfig::default()).is_err());
    }

    #[test]
    fn completion_estimates() {
        let d = builtin_scenario(ScenarioName::Complete).unwrap().dataset;
        let c = fit_completion(&d, &DetectConfig::default()).unwrap();
        assert_eq!(c.loglik_sup, 0.0);
        assert_eq!(c.mean_values, d.y().iter().copied().collect::<Vec<_>>());

        let q = builtin_scenario(ScenarioName::Quasi).unwrap().dataset;
        let c = fit_completion(&q, &DetectConfig::default()).unwrap();
        assert!((c.loglik_sup - 2.0 * 0.5f64.ln()).abs() < 1e-9);
        for &i in &c.report.problematic {
            assert_eq!(c.mean_values[i], q.y()[i]);
        }
    }

    #[test]
    fn margins_respect_invariants() {
        let d = builtin_scenario(ScenarioName::Quasi).unwrap().dataset;
        let rep = detect(&d, 1e-7).unwrap();
        let b = rep.direction_vector().unwrap();
        let mask = rep.mask(d.n());
        for (i, &problematic) in mask.iter().enumerate() {
            let m = (2.0 * d.y()[i] - 1.0) * d.row(i).dot(&b);
            if problematic {
                assert!(m > 1e-7);
            } else {
                assert!(m.abs() <= 1e-7);
            }
        }
    }
}
