//! Dense complex linear algebra shared by the orbit engine, the connection
//! normal forms and the Garnier numerics.

mod conjugacy;
mod logexp;
mod schur;
mod svd;

pub(crate) use conjugacy::normalize as normalize_conjugator;
pub use conjugacy::{commutant_basis, null_space, solve_conjugator};
pub use logexp::{expm, matrix_log_normalized};
pub use schur::{eigen_spectrum, sylvester_triangular, ClusteredSchur, Spectrum};
pub use svd::{svd, Svd};

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::DMatrix;

/// Dense square complex matrix.
pub type CMatrix = DMatrix<C64>;

pub fn identity(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

pub fn zeros(m: usize) -> CMatrix {
    CMatrix::zeros(m, m)
}

pub fn scalar(m: usize, z: C64) -> CMatrix {
    CMatrix::from_diagonal_element(m, m, z)
}

pub fn diag(values: &[C64]) -> CMatrix {
    let m = values.len();
    CMatrix::from_fn(m, m, |i, j| if i == j { values[i] } else { C64::new(0.0, 0.0) })
}

/// Builds a matrix from real row-major data.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(m, n, |i, j| C64::new(rows[i][j], 0.0))
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// `‖a − b‖_F / max(1, ‖a‖_F, ‖b‖_F)`.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm().max(b.norm()).max(1.0);
    (a - b).norm() / scale
}

pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && rel_diff(a, b) <= tol
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn determinant(a: &CMatrix) -> C64 {
    if a.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    a.clone().lu().determinant()
}

/// `|det a| / ‖a‖_F^m`, a scale-free measure of how far `a` is from singular.
pub fn normalized_det(a: &CMatrix) -> f64 {
    let m = a.nrows();
    if m == 0 {
        return 1.0;
    }
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a / C64::new(norm, 0.0)).lu().determinant().norm()
}

pub fn is_invertible(a: &CMatrix, singular_tol: f64) -> bool {
    a.is_square() && normalized_det(a) > singular_tol
}

pub fn inverse(a: &CMatrix, singular_tol: f64) -> Result<CMatrix> {
    ensure_square(a)?;
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    if normalized_det(a) <= singular_tol {
        return Err(Error::Singular {
            det: determinant(a).norm(),
        });
    }
    a.clone().try_inverse().ok_or(Error::Singular {
        det: determinant(a).norm(),
    })
}

/// Block diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (p, q) = (a.nrows(), b.nrows());
    let mut out = zeros(p + q);
    out.view_mut((0, 0), (p, p)).copy_from(a);
    out.view_mut((p, p), (q, q)).copy_from(b);
    out
}

pub fn is_upper_triangular(a: &CMatrix, abs_tol: f64) -> bool {
    (0..a.nrows()).all(|i| (0..i.min(a.ncols())).all(|j| a[(i, j)].norm() <= abs_tol))
}
