//! Small dense helpers over `nalgebra` used by the model and cone modules.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Induced infinity norm: the largest absolute row sum.
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Symmetry tolerance `1e-10 (1 + |A|_inf)`.
pub fn tol_sym(a: &DMatrix<f64>) -> f64 {
    1e-10 * (1.0 + norm_inf(a))
}

/// Eigenvalue tolerance `1e-9 (1 + |A|_inf)`.
pub fn tol_eig(a: &DMatrix<f64>) -> f64 {
    1e-9 * (1.0 + norm_inf(a))
}

pub fn ensure_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Checks symmetry within `tol` and returns the first offending pair otherwise.
pub fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = ensure_square(a)?;
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if j > i && (v - a[(j, i)]).abs() > tol {
                return Err(Error::NonSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix with a unit eigenvector.
pub fn min_eigenpair(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (f64::INFINITY, DVector::zeros(0));
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut k = 0;
    for i in 1..n {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    min_eigenpair(a).0
}

/// Symmetric square root of a PSD matrix; eigenvalues below zero are clipped.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let roots = eig.eigenvalues.map(|l| libm::sqrt(l.max(0.0)));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.transpose()
}

pub fn quad_form(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[(i, j)] * x[j];
        }
        s += x[i] * row;
    }
    s
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}
