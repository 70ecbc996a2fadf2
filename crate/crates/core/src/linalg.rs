//! Dense helpers shared by the spectral checks.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm of a normal matrix, via the Hermitian part of `i^k M`.
///
/// Only used for Hermitian or anti-Hermitian arguments.
pub fn normal_norm(m: &DMatrix<Complex64>) -> f64 {
    let herm_defect = max_abs(&(m - m.adjoint()));
    let h = if herm_defect <= max_abs(&(m + m.adjoint())) {
        m.clone()
    } else {
        m * Complex64::i()
    };
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    hermitian_eigenvalues(&h)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// Reduces an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
