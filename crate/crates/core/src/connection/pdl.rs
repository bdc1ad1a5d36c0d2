use super::{gauge_residual, integer_offset, GaugeTransform, GermConnection, MatLaurent, ReducedConnection};
use crate::error::{Error, Result};
use crate::linalg::{identity, inverse, null_space, svd, sylvester_triangular, CMatrix, ClusteredSchur};
use crate::tol::Tolerances;
use crate::C64;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Output of [`pdl_reduce`]: `Y = G Z` carries the input germ to the
/// reduced one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub reduced: ReducedConnection,
    pub gauge: GaugeTransform,
    /// Largest coefficient of `G·Ã − A·G + w·G'` up to the truncation
    /// degree.
    pub residual: f64,
}

/// Orders eigenvalue clusters so that clusters with integer differences are
/// adjacent, with decreasing real parts inside each such class.
fn class_order(reps: &[C64], tol: f64) -> Vec<usize> {
    let n = reps.len();
    let mut class: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if integer_offset(reps[i] - reps[j], tol).is_some() {
                let (from, to) = (class[i], class[j]);
                for c in class.iter_mut() {
                    if *c == from {
                        *c = to;
                    }
                }
            }
        }
    }
    let desc = |a: &usize, b: &usize| {
        reps[*b]
            .re
            .total_cmp(&reps[*a].re)
            .then(reps[*a].im.total_cmp(&reps[*b].im))
            .then(a.cmp(b))
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        let mut members: Vec<usize> = (0..n).filter(|&i| class[i] == root).collect();
        if !members.is_empty() {
            members.sort_by(desc);
            groups.push(members);
        }
    }
    groups.sort_by(|a, b| desc(&a[0], &b[0]));
    groups.concat()
}

fn columns(vecs: &[DVector<C64>], rows: usize) -> CMatrix {
    if vecs.is_empty() {
        CMatrix::zeros(rows, 0)
    } else {
        CMatrix::from_columns(vecs)
    }
}

/// Left singular vectors of `a` for its nonzero singular values, largest
/// first.
fn sorted_left_vectors(a: &CMatrix) -> Vec<DVector<C64>> {
    let dec = svd(a);
    dec.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.0)
        .map(|(k, _)| dec.u.column(k).into_owned())
        .collect()
}

fn is_jordan(d: &CMatrix, tiny: f64) -> bool {
    let l = d.nrows();
    let diag_equal = (1..l).all(|u| (d[(u, u)] - d[(0, 0)]).norm() <= tiny);
    let shape_ok = (0..l).all(|u| {
        ((u + 1)..l).all(|v| {
            let z = d[(u, v)];
            if v == u + 1 {
                z.norm() <= tiny || (z - C64::new(1.0, 0.0)).norm() <= tiny
            } else {
                z.norm() <= tiny
            }
        })
    });
    diag_equal && shape_ok
}

/// Basis `W` with `D W = W J`, `J` a Jordan matrix with eigenvalue `mu`, for
/// an upper triangular block `D` whose spectrum clusters at `mu`.
///
/// Chains are chosen from the top of the kernel filtration of
/// `N = D − mu I` downwards: at each level the new chain heads span the part
/// of `ker N^j` orthogonal to `ker N^{j−1}` and to the images of the chains
/// already started.
fn jordan_basis(d: &CMatrix, mu: C64, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    let l = d.nrows();
    let scale = crate::linalg::max_abs(d).max(1.0);
    if is_jordan(d, 1e-14 * scale) {
        let mut j = d.clone();
        for u in 0..l {
            j[(u, u)] = mu;
            if u + 1 < l {
                j[(u, u + 1)] = C64::new(j[(u, u + 1)].re.round(), 0.0);
            }
        }
        return Ok((identity(l), j));
    }
    let n = d - identity(l) * mu;
    let nscale = n.norm().max(1.0);
    let mut kernels: Vec<Vec<DVector<C64>>> = vec![Vec::new()];
    let mut power = identity(l);
    for j in 1..=l {
        power = &power * &n;
        let k = null_space(&power, tol.cluster, nscale.powi(j as i32));
        let full = k.len() == l;
        kernels.push(k);
        if full {
            break;
        }
    }
    if kernels.last().map_or(0, Vec::len) != l {
        return Err(Error::Conditioning(format!(
            "eigenvalue cluster at {mu} is not numerically nilpotent after the shift"
        )));
    }
    let top = kernels.len() - 1;
    let mut chains: Vec<(DVector<C64>, usize)> = Vec::new();
    for j in (1..=top).rev() {
        let existing: Vec<DVector<C64>> = chains
            .iter()
            .map(|(v, len)| {
                let mut w = v.clone();
                for _ in 0..(len - j) {
                    w = &n * w;
                }
                w
            })
            .collect();
        let fresh = kernels[j].len() as isize - kernels[j - 1].len() as isize - existing.len() as isize;
        if fresh < 0 {
            return Err(Error::Conditioning("inconsistent kernel filtration".into()));
        }
        if fresh == 0 {
            continue;
        }
        let mut span: Vec<DVector<C64>> = kernels[j - 1].clone();
        span.extend(existing);
        let kj = columns(&kernels[j], l);
        let proj = if span.is_empty() {
            kj
        } else {
            let r = span.len();
            let u = columns(&sorted_left_vectors(&columns(&span, l))[..r], l);
            &kj - &u * (u.adjoint() * &kj)
        };
        for v in sorted_left_vectors(&proj).into_iter().take(fresh as usize) {
            chains.push((v, j));
        }
    }
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(l);
    let mut jmat = identity(l) * mu;
    for (v, len) in &chains {
        let start = cols.len();
        let mut chain = vec![v.clone()];
        for _ in 1..*len {
            let next = &n * chain.last().expect("nonempty chain");
            chain.push(next);
        }
        cols.extend(chain.into_iter().rev());
        for c in start..(start + len - 1) {
            jmat[(c, c + 1)] = C64::new(1.0, 0.0);
        }
    }
    Ok((columns(&cols, l), jmat))
}

fn block(a: &CMatrix, r: (usize, usize), c: (usize, usize)) -> CMatrix {
    a.view((r.0, c.0), (r.1, c.1)).clone_owned()
}

/// Holomorphic gauge reduction of a germ to reduced form.
///
/// The constant term is brought to Jordan form with clusters ordered by
/// integer class and decreasing real part. Then for `k = 1, …, d` the
/// degree-`k` coefficient is cleared by a gauge `I + P w^k`, where `P`
/// solves `(J − k) P − P J = −Ã_k` blockwise; blocks whose eigenvalues
/// differ by exactly `k` are resonant and kept. The truncation degree must
/// reach the largest integer gap in the spectrum of `A_0`.
pub fn pdl_reduce(germ: &GermConnection, tol: &Tolerances) -> Result<Reduction> {
    germ.validate()?;
    let m = germ.m;
    let d = germ.degree();
    let a0 = &germ.coeffs[0];
    let cs = ClusteredSchur::new(a0, tol.cluster, |reps| class_order(reps, tol.cluster))?;

    // clusters in diagonal order, with representatives snapped to exact
    // integer offsets from the leading cluster of their class
    let mut reps: Vec<C64> = cs.clusters.iter().map(|c| c.2).collect();
    let mut class_start = vec![0usize; reps.len()];
    let mut required = 0i64;
    for a in 1..reps.len() {
        let base_idx = class_start[a - 1];
        let base = reps[base_idx];
        if let Some(off) = integer_offset(reps[a] - base, tol.cluster) {
            class_start[a] = base_idx;
            reps[a] = base + C64::new(off as f64, 0.0);
            required = required.max(-off);
        } else {
            class_start[a] = a;
        }
    }
    if (d as i64) < required {
        return Err(Error::RaiseDegree {
            required: required as usize,
            given: d,
        });
    }

    let ranges: Vec<(usize, usize)> = cs.clusters.iter().map(|c| (c.0, c.1)).collect();
    let mut w = CMatrix::zeros(m, m);
    let mut jm = CMatrix::zeros(m, m);
    let mut jblocks = Vec::with_capacity(ranges.len());
    for (&(s, l), mu) in ranges.iter().zip(&reps) {
        let (wb, jb) = jordan_basis(&block(&cs.blocks, (s, l), (s, l)), *mu, tol)?;
        w.view_mut((s, s), (l, l)).copy_from(&wb);
        jm.view_mut((s, s), (l, l)).copy_from(&jb);
        jblocks.push(jb);
    }
    let p0 = &cs.basis * w;
    let p0inv = inverse(&p0, tol.singular)
        .map_err(|_| Error::Conditioning("Jordan basis of the constant term is singular".into()))?;
    let mut coeffs: Vec<CMatrix> = germ.coeffs.iter().map(|a| &p0inv * a * &p0).collect();
    coeffs[0] = jm;
    let mut current = MatLaurent { m, k0: 0, coeffs };
    let mut gauge = GaugeTransform::constant(p0);

    for k in 1..=d {
        let ak = current.coeff(k as i64);
        let mut p = CMatrix::zeros(m, m);
        let mut resonant = vec![vec![false; ranges.len()]; ranges.len()];
        for (a, &(sa, la)) in ranges.iter().enumerate() {
            for (b, &(sb, lb)) in ranges.iter().enumerate() {
                if integer_offset(reps[a] - reps[b], tol.cluster) == Some(k as i64) {
                    resonant[a][b] = true;
                    continue;
                }
                let lhs = &jblocks[a] - identity(la) * C64::new(k as f64, 0.0);
                let x = sylvester_triangular(&lhs, &jblocks[b], &(-block(&ak, (sa, la), (sb, lb))))?;
                p.view_mut((sa, sb), (la, lb)).copy_from(&x);
            }
        }
        let step = GaugeTransform::elementary(&p, k);
        let step_inv = step.unipotent_inverse(d as i64);
        let bound = Some(d as i64);
        let conj = step_inv.mul(&current.mul(&step, bound), bound);
        let shift = step_inv.mul(&step.euler_derivative(), bound);
        current = conj.sub(&shift).truncated(d as i64);
        gauge = gauge.mul(&step, bound);

        let mut ck = current.coeff(k as i64);
        for (a, &(sa, la)) in ranges.iter().enumerate() {
            for (b, &(sb, lb)) in ranges.iter().enumerate() {
                if !resonant[a][b] {
                    ck.view_mut((sa, sb), (la, lb)).fill(C64::new(0.0, 0.0));
                }
            }
        }
        current.coeffs[k] = ck;
    }

    let mut coeffs = current.coeffs;
    coeffs.resize(d + 1, CMatrix::zeros(m, m));
    let out = GermConnection { m, coeffs };
    let residual = gauge_residual(germ, &gauge, &out, Some(d as i64));
    let reduced = ReducedConnection::new(out, tol)?;
    Ok(Reduction { reduced, gauge, residual })
}
