//! Binary-response datasets with an explicit design matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// A design matrix `x` (n x p) with a 0/1 response `y`.
///
/// When an intercept is requested it is materialized as an all-ones first
/// column; nothing downstream adds one implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
    intercept: bool,
}

impl Dataset {
    /// Builds a dataset from a complete design matrix.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<Self> {
        let intercept = x.ncols() > 0
            && names.first().map(|n| n == INTERCEPT_NAME).unwrap_or(false)
            && x.column(0).iter().all(|&v| v == 1.0);
        let d = Self {
            x,
            y,
            names,
            intercept,
        };
        d.validate()?;
        Ok(d)
    }

    /// Builds a dataset from raw predictors, prepending an all-ones column.
    pub fn with_intercept(
        predictors: DMatrix<f64>,
        y: DVector<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = predictors.nrows();
        let mut x = DMatrix::from_element(n, predictors.ncols() + 1, 1.0);
        x.columns_mut(1, predictors.ncols()).copy_from(&predictors);
        let mut all_names = Vec::with_capacity(names.len() + 1);
        all_names.push(INTERCEPT_NAME.to_string());
        all_names.extend(names);
        let d = Self {
            x,
            y,
            names: all_names,
            intercept: true,
        };
        d.validate()?;
        Ok(d)
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(
        rows: &[Vec<f64>],
        y: &[f64],
        names: &[&str],
        intercept: bool,
    ) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidData("ragged rows".into()));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        let y = DVector::from_column_slice(y);
        let names = names.iter().map(|s| s.to_string()).collect();
        if intercept {
            Self::with_intercept(x, y, names)
        } else {
            Self::new(x, y, names)
        }
    }

    fn validate(&self) -> Result<()> {
        let (n, p) = self.x.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!(
                "need n >= 1 and p >= 1, got {n}x{p}"
            )));
        }
        if self.y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.y.len(),
            });
        }
        if self.names.len() != p {
            return Err(Error::InvalidData(format!(
                "{} column names for {p} columns",
                self.names.len()
            )));
        }
        if let Some(i) = self.y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidData(format!(
                "response at row {i} is {} (must be 0 or 1)",
                self.y[i]
            )));
        }
        if let Some(idx) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite design entry at row {}, column {}",
                idx % n,
                idx / n
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    pub fn successes(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1.0).count()
    }

    /// Rows restricted to `rows`, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        let d = Self {
            x,
            y,
            names: self.names.clone(),
            intercept: self.intercept,
        };
        d.validate()?;
        Ok(d)
    }

    /// All rows except `skip`.
    pub fn without(&self, skip: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n()).filter(|&i| i != skip).collect();
        self.subset(&rows)
    }

    /// Appends one observation `(x_new, y_new)` as the last row.
    pub fn augmented(&self, x_new: &DVector<f64>, y_new: f64) -> Result<Self> {
        if x_new.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: x_new.len(),
            });
        }
        let n = self.n();
        let x = self.x.clone().insert_row(n, 0.0);
        let mut x = x;
        x.row_mut(n).copy_from(&x_new.transpose());
        let y = self.y.clone().push(y_new);
        let d = Self {
            x,
            y,
            names: self.names.clone(),
            intercept: self.intercept,
        };
        d.validate()?;
        Ok(d)
    }

    /// The same design with every response flipped (y -> 1 - y).
    pub fn relabeled(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.map(|v| 1.0 - v),
            names: self.names.clone(),
            intercept: self.intercept,
        }
    }

    /// Replaces the design while keeping the response.
    pub(crate) fn with_design(&self, x: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let d = Self {
            x,
            y: self.y.clone(),
            names,
            intercept: false,
        };
        d.validate()?;
        Ok(d)
    }

    /// `2y - 1` for every row.
    pub(crate) fn signs(&self) -> DVector<f64> {
        self.y.map(|v| 2.0 * v - 1.0)
    }
}
