//! Thin wrappers around the dense solver backend so the rest of the crate
//! never touches backend types beyond `faer::Mat`.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// Eigenvalues of a general complex matrix, unordered.
pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    m.eigenvalues()
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))
}

/// Full eigendecomposition of a general complex matrix.
/// Returns (eigenvalues, eigenvectors as columns), sorted by (re, im).
pub fn eigenpairs(m: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    let evd = m
        .eigen()
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let s = evd.S();
    order.sort_by(|&a, &b| {
        let (x, y) = (s[a], s[b]);
        (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap()
    });
    let values: Vec<Complex64> = order.iter().map(|&j| s[j]).collect();
    let u = evd.U();
    let vectors = CMat::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigendecomposition of a Hermitian matrix (lower triangle is read).
/// Eigenvalues are real, ascending; eigenvectors are the columns.
pub fn hermitian_eigenpairs(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let n = m.nrows();
    let values = (0..n).map(|i| evd.S()[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Solves a x = b by partial-pivot LU; b may hold multiple right-hand sides.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    use faer::linalg::solvers::Solve;
    a.partial_piv_lu().solve(b)
}

pub fn determinant(m: &CMat) -> Complex64 {
    m.as_ref().determinant()
}

/// Smallest singular value; diagnostic companion to the eigenvalue objective.
pub fn smallest_singular_value(m: &CMat) -> Result<f64> {
    let s = m
        .as_ref()
        .singular_values()
        .map_err(|e| Error::EigenFailure(format!("svd failed: {e:?}")))?;
    Ok(s.last().copied().unwrap_or(0.0))
}

/// Frobenius norm.
pub fn frobenius_norm(m: &CMat) -> f64 {
    m.as_ref().norm_l2()
}

/// Largest absolute entry; crude but sufficient norm for residual scaling.
pub fn max_abs(m: &CMat) -> f64 {
    let mut v = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].norm());
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn rotation_matrix_has_imaginary_eigenvalues() {
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C::new(1.0, 0.0),
            (1, 0) => C::new(-1.0, 0.0),
            _ => C::new(0.0, 0.0),
        });
        let (vals, vecs) = eigenpairs(&m).unwrap();
        assert!((vals[0] - C::new(0.0, -1.0)).norm() < 1e-12);
        assert!((vals[1] - C::new(0.0, 1.0)).norm() < 1e-12);
        // residual check: m v = lambda v
        for j in 0..2 {
            for i in 0..2 {
                let mv: C = (0..2).map(|k| m[(i, k)] * vecs[(k, j)]).sum();
                assert!((mv - vals[j] * vecs[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_eigen_is_real_and_ascending() {
        // [[2, i],[-i, 3]] has eigenvalues (5 +- sqrt(5))/2
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C::new(2.0, 0.0),
            (0, 1) => C::new(0.0, 1.0),
            (1, 0) => C::new(0.0, -1.0),
            _ => C::new(3.0, 0.0),
        });
        let (vals, _) = hermitian_eigenpairs(&m).unwrap();
        let lo = (5.0 - 5.0f64.sqrt()) / 2.0;
        let hi = (5.0 + 5.0f64.sqrt()) / 2.0;
        assert!((vals[0] - lo).abs() < 1e-12);
        assert!((vals[1] - hi).abs() < 1e-12);
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = CMat::from_fn(3, 3, |i, j| {
            C::new((i * 3 + j) as f64, if i == j { 2.0 } else { -0.5 })
        });
        let x = CMat::from_fn(3, 1, |i, _| C::new(1.0 + i as f64, -(i as f64)));
        let b = &a * &x;
        let solved = solve(&a, &b);
        for i in 0..3 {
            assert!((solved[(i, 0)] - x[(i, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn determinant_of_triangular() {
        let m = CMat::from_fn(2, 2, |i, j| {
            if i <= j {
                C::new((i + j + 1) as f64, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        assert!((determinant(&m) - C::new(3.0, 0.0)).norm() < 1e-14);
    }
}
