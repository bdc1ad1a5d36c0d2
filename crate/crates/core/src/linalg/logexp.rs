use super::{identity, inverse, CMatrix, ClusteredSchur};
use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;
use std::f64::consts::PI;

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
pub fn expm(a: &CMatrix) -> CMatrix {
    let m = a.nrows();
    let norm1 = (0..m)
        .map(|j| (0..m).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let mut result = identity(m);
    let mut term = identity(m);
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
        if term.norm() <= 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Below this |arg μ| an eigenvalue is taken to lie exactly on the positive
/// real axis.
const ARG_ROUNDOFF: f64 = 1e-12;

/// Returns the unique `R` with `exp(2πi R) = M` and every eigenvalue of `R`
/// having real part in `[0, 1)`.
///
/// `R` is a primary matrix function of `M`: on each eigenvalue cluster
/// `μ(I + E)` of the Schur form it is `(log μ + log(I + E)) / 2πi` with the
/// branch of `log μ` fixed by the normalization, and `log(I + E)` summed as
/// a finite series (exact when `E` is nilpotent).
pub fn matrix_log_normalized(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let dim = super::ensure_square(m)?;
    if dim == 0 {
        return Ok(m.clone());
    }
    inverse(m, tol.singular)?;
    let cs = ClusteredSchur::new(m, tol.cluster, |reps| (0..reps.len()).collect())?;
    let mut f = CMatrix::zeros(dim, dim);
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    for &(start, len, rep) in &cs.clusters {
        let block = cs.blocks.view((start, start), (len, len)).clone_owned();
        let arg = rep.arg();
        if arg < -ARG_ROUNDOFF && arg > -2.0 * PI * tol.eq {
            return Err(Error::BranchCut {
                value: format!("{rep}"),
            });
        }
        let mut log_mu = C64::new(rep.norm().ln(), if arg.abs() <= ARG_ROUNDOFF { 0.0 } else { arg });
        if log_mu.im < 0.0 {
            log_mu += two_pi_i;
        }
        let e = &block / rep - identity(len);
        let mut series = CMatrix::zeros(len, len);
        let mut power = identity(len);
        for k in 1..=(len + 3) {
            power = &power * &e;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series += &power * C64::new(sign / k as f64, 0.0);
        }
        let flog = (identity(len) * log_mu + series) / two_pi_i;
        f.view_mut((start, start), (len, len)).copy_from(&flog);
    }
    let basis_inv = inverse(&cs.basis, tol.singular)?;
    Ok(&cs.basis * f * basis_inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_real_rows, rel_diff, scalar};

    fn exp2pii(r: &CMatrix) -> CMatrix {
        expm(&(r * C64::new(0.0, 2.0 * PI)))
    }

    #[test]
    fn log_of_identity_is_zero() {
        let r = matrix_log_normalized(&identity(3), &Tolerances::default()).unwrap();
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn log_of_minus_identity_is_half() {
        let r = matrix_log_normalized(&scalar(2, C64::new(-1.0, 0.0)), &Tolerances::default()).unwrap();
        assert!(rel_diff(&r, &scalar(2, C64::new(0.5, 0.0))) < 1e-14);
    }

    #[test]
    fn log_of_unipotent() {
        let u = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let r = matrix_log_normalized(&u, &Tolerances::default()).unwrap();
        let expected = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]) / C64::new(0.0, 2.0 * PI);
        assert!(rel_diff(&r, &expected) < 1e-14);
        // exponentiation oracle
        assert!(rel_diff(&exp2pii(&r), &u) < 1e-13);
    }

    #[test]
    fn expm_of_diagonal() {
        let d = diag(&[C64::new(1.0, 0.0), C64::new(0.0, PI)]);
        let e = expm(&d);
        assert!((e[(0, 0)] - C64::new(1f64.exp(), 0.0)).norm() < 1e-13);
        assert!((e[(1, 1)] - C64::new(-1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn branch_cut_is_flagged() {
        let mu = C64::from_polar(1.0, -1e-11);
        let r = matrix_log_normalized(&scalar(2, mu), &Tolerances::default());
        assert!(matches!(r, Err(Error::BranchCut { .. })));
    }

    #[test]
    fn singular_is_rejected() {
        let r = matrix_log_normalized(&from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]), &Tolerances::default());
        assert!(matches!(r, Err(Error::Singular { .. })));
    }
}
