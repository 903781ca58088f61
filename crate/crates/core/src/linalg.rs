//! Small dense helpers on top of nalgebra for Hermitian matrices.

use nalgebra::DVector;

use crate::{CMatrix, CVector, C64};

/// Largest eigenvalue of a Hermitian matrix.
///
/// Only the Hermitian part of `m` is used. An empty matrix yields 0.
pub fn largest_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn smallest_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigen-decomposition `m = U diag(values) U^H` of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Sum of outer products `sum_j v_j v_j^H`.
pub fn gram(vectors: &[CVector], dim: usize) -> CMatrix {
    if vectors.is_empty() {
        return CMatrix::zeros(dim, dim);
    }
    let stacked = CMatrix::from_columns(vectors);
    &stacked * stacked.adjoint()
}

/// Real part of `x^H y`.
pub fn re_dotc(x: &CVector, y: &CVector) -> f64 {
    x.dotc(y).re
}

/// Elementwise product.
pub fn hadamard(x: &CVector, y: &CVector) -> CVector {
    x.component_mul(y)
}

/// Unit-modulus projection with the convention that a zero entry maps to phase 0.
pub fn unit_phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 || !r.is_finite() {
        C64::new(1.0, 0.0)
    } else {
        C64::from_polar(1.0, z.im.atan2(z.re))
    }
}

/// Phase angle with the convention `arg(0) = 0`.
pub fn phase_angle(z: C64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}
