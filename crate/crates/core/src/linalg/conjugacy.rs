use super::{inverse, is_invertible, rel_diff, CMatrix};
use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Attempts at drawing an invertible element from a conjugator space.
const CONJUGATOR_ATTEMPTS: usize = 32;

/// Orthonormal basis of the null space of `a`. Singular values below
/// `rel_tol * scale` count as zero, where `scale` is the larger of the top
/// singular value and `scale_hint`.
pub fn null_space(a: &CMatrix, rel_tol: f64, scale_hint: f64) -> Vec<DVector<C64>> {
    let cols = a.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let dec = super::svd(a);
    let top = dec.singular_values.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * top.max(scale_hint);
    // a wide matrix has at least cols − rows null directions even when the
    // Jacobi sweep leaves them with tiny nonzero norms
    let forced = cols.saturating_sub(a.nrows());
    let mut out: Vec<(usize, DVector<C64>)> = dec
        .singular_values
        .iter()
        .enumerate()
        .filter(|(k, s)| **s <= threshold || *k >= cols - forced)
        .map(|(k, _)| (k, dec.v.column(k).into_owned()))
        .collect();
    out.sort_by_key(|(k, _)| *k);
    out.into_iter().map(|(_, v)| v).collect()
}

/// Linear system whose kernel is `{g : src_j g = g dst_j for all j}`,
/// unknowns ordered row-major.
fn intertwining_system(src: &[CMatrix], dst: &[CMatrix], m: usize) -> CMatrix {
    let mut sys = CMatrix::zeros(src.len() * m * m, m * m);
    for (j, (s, d)) in src.iter().zip(dst).enumerate() {
        let base = j * m * m;
        for a in 0..m {
            for b in 0..m {
                let row = base + a * m + b;
                for c in 0..m {
                    sys[(row, c * m + b)] += s[(a, c)];
                    sys[(row, a * m + c)] -= d[(c, b)];
                }
            }
        }
    }
    sys
}

fn check_shapes(src: &[CMatrix], dst: &[CMatrix]) -> Result<usize> {
    if src.len() != dst.len() {
        return Err(Error::Dimension(format!(
            "tuple lengths differ: {} vs {}",
            src.len(),
            dst.len()
        )));
    }
    let m = src.first().map_or(0, |a| a.nrows());
    if src.iter().chain(dst).any(|a| a.shape() != (m, m)) {
        return Err(Error::Dimension("matrices must be square of equal size".into()));
    }
    Ok(m)
}

fn reshape(v: &DVector<C64>, m: usize) -> CMatrix {
    CMatrix::from_fn(m, m, |i, j| v[i * m + j])
}

fn scale_of(mats: &[CMatrix]) -> f64 {
    mats.iter().map(|a| a.norm()).fold(0.0, f64::max)
}

/// Basis of the commutant `{g : g X = X g for all X in mats}`.
pub fn commutant_basis(mats: &[CMatrix], tol: &Tolerances) -> Result<Vec<CMatrix>> {
    let m = check_shapes(mats, mats)?;
    if mats.is_empty() {
        return Err(Error::Invalid("commutant of an empty family".into()));
    }
    let sys = intertwining_system(mats, mats, m);
    Ok(null_space(&sys, tol.null_space, scale_of(mats))
        .iter()
        .map(|v| reshape(v, m))
        .collect())
}

/// Normalizes a conjugator to unit Frobenius norm with its largest entry
/// real and positive.
pub(crate) fn normalize(g: CMatrix) -> CMatrix {
    let pivot = g
        .iter()
        .copied()
        .fold(C64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() * (1.0 + 1e-12) { z } else { best });
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { C64::new(1.0, 0.0) };
    let norm = g.norm();
    g * (phase / norm)
}

/// Finds an invertible `g` with `g⁻¹ src_j g = dst_j` for every `j`.
///
/// Returns `Ok(None)` when the intertwining space is zero, and
/// [`Error::IntertwinerNotConjugator`] when it is nonzero but no invertible
/// element turned up among the seeded random combinations.
pub fn solve_conjugator(
    src: &[CMatrix],
    dst: &[CMatrix],
    tol: &Tolerances,
    seed: u64,
) -> Result<Option<CMatrix>> {
    let m = check_shapes(src, dst)?;
    if m == 0 {
        return Ok(Some(CMatrix::zeros(0, 0)));
    }
    let sys = intertwining_system(src, dst, m);
    let scale = scale_of(src).max(scale_of(dst));
    let basis: Vec<CMatrix> = null_space(&sys, tol.null_space, scale)
        .iter()
        .map(|v| reshape(v, m))
        .collect();
    if basis.is_empty() {
        return Ok(None);
    }
    let verify = |g: &CMatrix| -> Result<bool> {
        let ginv = inverse(g, tol.singular)?;
        Ok(src
            .iter()
            .zip(dst)
            .all(|(s, d)| rel_diff(&(&ginv * s * g), d) <= 100.0 * tol.null_space))
    };
    let mut candidates: Vec<CMatrix> = Vec::with_capacity(CONJUGATOR_ATTEMPTS);
    if basis.len() == 1 {
        candidates.push(basis[0].clone());
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..CONJUGATOR_ATTEMPTS {
            let mut g = CMatrix::zeros(m, m);
            for b in &basis {
                let coeff = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                g += b * coeff;
            }
            candidates.push(g);
        }
    }
    for g in candidates {
        if is_invertible(&g, tol.singular.max(1e-10)) {
            return if verify(&g)? { Ok(Some(normalize(g))) } else { Ok(None) };
        }
    }
    Err(Error::IntertwinerNotConjugator)
}
