//! Small dense linear-algebra helpers shared by the fitters.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for rank decisions.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Solves `a x = b` for symmetric positive (semi)definite `a`.
///
/// Falls back to a diagonal ridge of `ridge * max(diag)` when the Cholesky
/// factorization fails, escalating it a few times before giving up.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    let scale = a
        .diagonal()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut eps = ridge.max(1e-14);
    for _ in 0..8 {
        let mut reg = a.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += eps * scale;
        }
        if let Some(ch) = reg.cholesky() {
            let x = ch.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        eps *= 100.0;
    }
    None
}

/// Inverse of a symmetric positive definite matrix.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// Orthonormal bases `(row space, null space)` of `m`, as column matrices
/// with `m.ncols()` rows.
pub(crate) fn row_and_null_space(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = m.ncols();
    if m.nrows() == 0 {
        return (DMatrix::zeros(p, 0), DMatrix::identity(p, p));
    }
    // Work with the p x p Gram matrix so the SVD always yields a full basis.
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cutoff = (RANK_TOL * max).max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let rank = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > cutoff)
        .count();
    let row = DMatrix::from_fn(p, rank, |r, c| eig.eigenvectors[(r, order[c])]);
    let null = DMatrix::from_fn(p, p - rank, |r, c| eig.eigenvectors[(r, order[rank + c])]);
    (row, null)
}

/// Numerical rank of `m`.
pub(crate) fn rank(m: &DMatrix<f64>) -> usize {
    row_and_null_space(m).0.ncols()
}

/// Columns of `m` that are linearly dependent on earlier columns.
pub(crate) fn dependent_columns(m: &DMatrix<f64>) -> Vec<usize> {
    let mut deps = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..m.ncols() {
        let mut cols = kept.clone();
        cols.push(j);
        if rank(&m.select_columns(&cols)) == cols.len() {
            kept.push(j);
        } else {
            deps.push(j);
        }
    }
    deps
}

/// Scales each column by its max-abs value; returns the scaled matrix and the
/// scale factors (1 for all-zero columns).
pub(crate) fn column_max_scale(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let scales = DVector::from_iterator(
        m.ncols(),
        m.column_iter().map(|c| {
            let s = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }),
    );
    let mut out = m.clone();
    for (j, mut c) in out.column_iter_mut().enumerate() {
        c /= scales[j];
    }
    (out, scales)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 50.0, 1.0, 50.0]);
        let (row, null) = row_and_null_space(&m);
        assert_eq!(row.ncols(), 1);
        assert_eq!(null.ncols(), 1);
        let v = null.column(0);
        assert!((v[0] * 1.0 + v[1] * 50.0).abs() < 1e-10);
    }

    #[test]
    fn finds_dependent_columns() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 1.0, 4.0, 5.0, 1.0, 6.0, 7.0]);
        assert_eq!(dependent_columns(&m), vec![2]);
    }

    #[test]
    fn ridge_fallback_solves_singular_system() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 2.0]);
        let x = solve_spd(&a, &b, 1e-10).unwrap();
        assert!(((a * x) - b).norm() < 1e-6);
    }
}
