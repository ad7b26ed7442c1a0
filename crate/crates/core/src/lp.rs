//! Dense bounded-variable primal simplex for the small linear programs used by
//! separation detection.
//!
//! Problems are stated as `maximize c'x` subject to linear rows and finite
//! lower bounds on every variable. Phase one is only run when the all-slack
//! start at the lower bounds is infeasible.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective' x` s.t. `constraints`, `lower <= x <= upper`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_pivots: usize,
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub cost_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_pivots: 50_000,
            feas_tol: 1e-9,
            pivot_tol: 1e-11,
            cost_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

struct Tableau {
    m: usize,
    ncols: usize,
    t: Vec<f64>,
    value: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        for j in 0..nc {
            self.t[r * nc + j] /= piv;
        }
        let row_r: Vec<f64> = self.t[r * nc..(r + 1) * nc].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f != 0.0 {
                let row = &mut self.t[i * nc..(i + 1) * nc];
                for (a, b) in row.iter_mut().zip(&row_r) {
                    *a -= f * b;
                }
            }
        }
        self.pivots += 1;
    }

    /// Runs the simplex loop maximizing `cost' x` from the current basis.
    fn optimize(&mut self, cost: &[f64], opts: &LpOptions) -> Result<()> {
        let nc = self.ncols;
        let mut reduced: Vec<f64> = (0..nc)
            .map(|j| {
                let mut d = cost[j];
                for i in 0..self.m {
                    d -= cost[self.basis[i]] * self.at(i, j);
                }
                d
            })
            .collect();
        let mut degenerate_run = 0usize;

        loop {
            if self.pivots > opts.max_pivots {
                return Err(Error::Lp(format!(
                    "pivot limit {} reached",
                    opts.max_pivots
                )));
            }
            let bland = degenerate_run > 50;
            // Entering variable.
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..nc {
                let dir = match self.state[j] {
                    State::Basic(_) => continue,
                    _ if self.upper[j] - self.lower[j] <= 0.0 => continue,
                    State::Lower if reduced[j] > opts.cost_tol => 1.0,
                    State::Upper if reduced[j] < -opts.cost_tol => -1.0,
                    _ => continue,
                };
                let score = reduced[j].abs();
                match entering {
                    None => entering = Some((j, dir)),
                    Some((k, _)) if !bland && score > reduced[k].abs() => entering = Some((j, dir)),
                    _ => {}
                }
                if bland && entering.is_some() {
                    break;
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(());
            };

            // Ratio test.
            let range = self.upper[q] - self.lower[q];
            let mut limits: Vec<(usize, f64, f64)> = Vec::new();
            for i in 0..self.m {
                let a = self.at(i, q);
                if a.abs() <= opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * a;
                let limit = if rate < 0.0 {
                    (self.value[b] - self.lower[b]).max(0.0) / -rate
                } else if self.upper[b].is_finite() {
                    (self.upper[b] - self.value[b]).max(0.0) / rate
                } else {
                    continue;
                };
                limits.push((i, limit, rate));
            }
            let min_limit = limits.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
            let (theta, leave) = if range <= min_limit {
                (range, None)
            } else {
                let tied = limits.iter().filter(|l| l.1 <= min_limit + opts.feas_tol);
                let chosen = if bland {
                    tied.min_by_key(|l| self.basis[l.0])
                } else {
                    tied.max_by(|x, y| self.at(x.0, q).abs().total_cmp(&self.at(y.0, q).abs()))
                };
                let &(r, limit, rate) = chosen.expect("finite minimum has a row");
                (limit, Some((r, rate)))
            };
            if !theta.is_finite() {
                return Err(Error::Lp("problem is unbounded".into()));
            }
            degenerate_run = if theta <= opts.feas_tol {
                degenerate_run + 1
            } else {
                0
            };

            // Move along the edge.
            self.value[q] += dir * theta;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.value[b] -= dir * theta * a;
                }
            }

            match leave {
                None => {
                    // bound flip
                    self.state[q] = if dir > 0.0 {
                        State::Upper
                    } else {
                        State::Lower
                    };
                    self.value[q] = if dir > 0.0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                    self.pivots += 1;
                }
                Some((r, rate)) => {
                    let b = self.basis[r];
                    if rate < 0.0 {
                        self.state[b] = State::Lower;
                        self.value[b] = self.lower[b];
                    } else {
                        self.state[b] = State::Upper;
                        self.value[b] = self.upper[b];
                    }
                    self.pivot(r, q);
                    self.basis[r] = q;
                    self.state[q] = State::Basic(r);
                    let dq = reduced[q];
                    for (j, rj) in reduced.iter_mut().enumerate().take(nc) {
                        *rj -= dq * self.at(r, j);
                    }
                    reduced[q] = 0.0;
                }
            }
        }
    }
}

/// Solves `lp`, returning the optimal point.
pub fn solve(lp: &LinearProgram, opts: &LpOptions) -> Result<LpOutcome> {
    let ns = lp.num_vars();
    let m = lp.constraints.len();
    if lp.lower.len() != ns || lp.upper.len() != ns {
        return Err(Error::Lp(
            "bound vectors do not match variable count".into(),
        ));
    }
    for j in 0..ns {
        if !lp.lower[j].is_finite() {
            return Err(Error::Lp(format!(
                "variable {j} needs a finite lower bound"
            )));
        }
        if lp.upper[j] < lp.lower[j] {
            return Err(Error::Lp(format!("variable {j} has empty bounds")));
        }
    }

    // Normalize rows to <= or = with their slack.
    let mut rows: Vec<(Vec<f64>, bool, f64)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        if c.coeffs.len() != ns {
            return Err(Error::Lp(
                "constraint width does not match variable count".into(),
            ));
        }
        match c.relation {
            Relation::Le => rows.push((c.coeffs.clone(), false, c.rhs)),
            Relation::Ge => rows.push((c.coeffs.iter().map(|v| -v).collect(), false, -c.rhs)),
            Relation::Eq => rows.push((c.coeffs.clone(), true, c.rhs)),
        }
    }

    let residual: Vec<f64> = rows
        .iter()
        .map(|(a, _, b)| b - a.iter().zip(&lp.lower).map(|(x, l)| x * l).sum::<f64>())
        .collect();
    let needs_art: Vec<bool> = rows
        .iter()
        .zip(&residual)
        .map(|((_, eq, _), &r)| {
            if *eq {
                r.abs() > opts.feas_tol
            } else {
                r < -opts.feas_tol
            }
        })
        .collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let ncols = ns + m + n_art;

    let mut t = vec![0.0; m * ncols];
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut value = lp.lower.clone();
    let mut state = vec![State::Lower; ns];
    let mut basis = vec![0usize; m];
    lower.extend(std::iter::repeat_n(0.0, m + n_art));
    upper.extend(
        rows.iter()
            .map(|(_, eq, _)| if *eq { 0.0 } else { f64::INFINITY }),
    );
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_art));
    value.extend(std::iter::repeat_n(0.0, m + n_art));
    state.extend(std::iter::repeat_n(State::Lower, m + n_art));

    let mut art = 0;
    for (i, (a, _, _)) in rows.iter().enumerate() {
        let sign = if needs_art[i] {
            residual[i].signum()
        } else {
            1.0
        };
        for j in 0..ns {
            t[i * ncols + j] = a[j] * sign;
        }
        t[i * ncols + ns + i] = sign;
        if needs_art[i] {
            let col = ns + m + art;
            t[i * ncols + col] = 1.0;
            basis[i] = col;
            state[col] = State::Basic(i);
            value[col] = residual[i].abs();
            art += 1;
        } else {
            basis[i] = ns + i;
            state[ns + i] = State::Basic(i);
            value[ns + i] = residual[i];
        }
    }

    let mut tab = Tableau {
        m,
        ncols,
        t,
        value,
        lower,
        upper,
        state,
        basis,
        pivots: 0,
    };

    if n_art > 0 {
        let mut cost = vec![0.0; ncols];
        for c in cost.iter_mut().skip(ns + m) {
            *c = -1.0;
        }
        tab.optimize(&cost, opts)?;
        let infeas: f64 = (ns + m..ncols).map(|j| tab.value[j]).sum();
        if infeas > opts.feas_tol * (1.0 + m as f64) {
            return Err(Error::Lp(format!(
                "problem is infeasible (phase-one residual {infeas:.3e})"
            )));
        }
        for j in ns + m..ncols {
            tab.upper[j] = 0.0;
            if !matches!(tab.state[j], State::Basic(_)) {
                tab.value[j] = 0.0;
                tab.state[j] = State::Lower;
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..ns].copy_from_slice(&lp.objective);
    tab.optimize(&cost, opts)?;

    let x: Vec<f64> = (0..ns)
        .map(|j| tab.value[j].clamp(lp.lower[j], lp.upper[j]))
        .collect();
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpOutcome {
        x,
        objective,
        pivots: tab.pivots,
    })
}
