//! Dense helpers on top of nalgebra: guarded inversion, rank, null spaces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SgarchError};

/// Condition number above which a warning is logged.
pub const COND_WARN: f64 = 1e10;
/// Condition number above which inversion is refused.
pub const COND_FAIL: f64 = 1e14;

/// Relative singular-value tolerance used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Inverse of a symmetric matrix via its eigendecomposition.
///
/// The condition number is the ratio of extreme absolute eigenvalues.
pub fn sym_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SgarchError::Singular { what, cond: f64::INFINITY });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond <= COND_FAIL) {
        return Err(SgarchError::Singular { what, cond });
    }
    if cond > COND_WARN {
        log::warn!("{what} is ill-conditioned (condition number {cond:.3e})");
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

/// Inverse of a symmetric matrix that must be positive definite.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if m.nrows() > 0 && m.iter().all(|v| v.is_finite()) {
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        if min <= 0.0 {
            let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            log::debug!("{what} has eigenvalue {min:.3e}; not positive definite");
            return Err(SgarchError::Singular {
                what,
                cond: if min == 0.0 { f64::INFINITY } else { -max / min },
            });
        }
    }
    sym_inverse(m, what)
}

/// Numerical rank with singular values below `RANK_TOL`·σ_max treated as zero.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |a, v| a.max(*v));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * max).count()
}

/// Orthonormal basis (as columns) of {x : R x = 0}.
pub fn null_space(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.ncols();
    let rtr = r.transpose() * r;
    let eig = SymmetricEigen::new(rtr);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Eigenvalues of RᵀR carry absolute error of order ε·max.
    let tol = (1e-12 * max).max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() <= tol || max == 0.0)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Minimum-norm solution of R x = r for full row rank R.
pub fn min_norm_solution(r_mat: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    let rrt = r_mat * r_mat.transpose();
    let inv = sym_inverse(&rrt, "R Rᵀ")?;
    Ok(r_mat.transpose() * inv * r)
}

/// Row-major slice of a matrix.
pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Matrix as a vector of rows.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_of_spd() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = sym_inverse(&m, "m").unwrap();
        let id = &m * &inv;
        assert_relative_eq!(id, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn singular_is_refused() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(sym_inverse(&m, "m"), Err(SgarchError::Singular { .. })));
    }

    #[test]
    fn indefinite_is_refused_by_spd_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(sym_inverse(&m, "m").is_ok());
        assert!(spd_inverse(&m, "m").is_err());
    }

    #[test]
    fn rank_and_null_space() {
        let r = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 2.0, 0.0, 2.0]);
        assert_eq!(rank(&r), 1);
        let n = null_space(&r);
        assert_eq!(n.ncols(), 2);
        assert_relative_eq!(&r * &n, DMatrix::zeros(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn min_norm_solution_satisfies_system() {
        let r = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 1.0]);
        let x = min_norm_solution(&r, &DVector::from_vec(vec![0.4])).unwrap();
        assert_relative_eq!(x.as_slice(), [0.0, 0.2, 0.2].as_slice(), epsilon = 1e-14);
    }
}
