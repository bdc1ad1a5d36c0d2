use super::CMatrix;
use crate::C64;

/// Singular value decomposition `A = U Σ V^H` with singular values sorted
/// in decreasing order.
///
/// `u` has the shape of `A`; its columns belonging to zero singular values
/// are zero. `v` is square and unitary.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns are rotated pairwise until mutually orthogonal; this keeps small
/// singular values accurate relative to the matrix, which null-space and
/// Jordan chain computations rely on.
pub fn svd(a: &CMatrix) -> Svd {
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = CMatrix::identity(cols, cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)] * phase.conj());
                    w[(i, p)] = x * c - y * s;
                    w[(i, q)] = x * s + y * c;
                }
                for i in 0..cols {
                    let (x, y) = (v[(i, p)], v[(i, q)] * phase.conj());
                    v[(i, p)] = x * c - y * s;
                    v[(i, q)] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = (0..cols).map(|j| (j, w.column(j).norm())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut u = CMatrix::zeros(rows, cols);
    let mut vs = CMatrix::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    for (k, &(j, s)) in order.iter().enumerate() {
        if s > 0.0 {
            u.set_column(k, &(w.column(j) / C64::new(s, 0.0)));
        }
        vs.set_column(k, &v.column(j));
        singular_values.push(s);
    }
    Svd { u, singular_values, v: vs }
}
