use super::{ensure_square, identity, is_upper_triangular, CMatrix};
use crate::error::{Error, Result};
use crate::C64;
use nalgebra::linalg::Schur;
use serde::{Deserialize, Serialize};

/// Eigenvalues with algebraic multiplicities, plus a unitary basis change
/// `Q` with `Q⁻¹ M Q` upper triangular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    #[serde(with = "eig_list")]
    pub eigenvalues: Vec<(C64, usize)>,
    #[serde(with = "crate::json::matrix")]
    pub basis_change: CMatrix,
    #[serde(with = "crate::json::matrix")]
    pub triangular: CMatrix,
}

mod eig_list {
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(C64, usize)], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|(z, k)| ([z.re, z.im], *k))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(C64, usize)>, D::Error> {
        let raw = Vec::<([f64; 2], usize)>::deserialize(d)?;
        Ok(raw.into_iter().map(|([re, im], k)| (C64::new(re, im), k)).collect())
    }
}

pub fn eigen_spectrum(m: &CMatrix, cluster_tol: f64) -> Result<Spectrum> {
    let sorted = SortedSchur::new(m, cluster_tol, |reps| (0..reps.len()).collect())?;
    let eigenvalues = sorted
        .reps
        .iter()
        .enumerate()
        .map(|(c, z)| (*z, sorted.ids.iter().filter(|&&id| id == c).count()))
        .collect();
    Ok(Spectrum {
        eigenvalues,
        basis_change: sorted.q,
        triangular: sorted.t,
    })
}

/// Schur form whose diagonal is grouped into eigenvalue clusters in a
/// caller-chosen order.
pub(crate) struct SortedSchur {
    pub q: CMatrix,
    pub t: CMatrix,
    /// Cluster id of each diagonal position.
    pub ids: Vec<usize>,
    /// Mean eigenvalue of each cluster, indexed by id.
    pub reps: Vec<C64>,
}

impl SortedSchur {
    /// `order` receives the cluster representatives and returns cluster ids
    /// in the order they should appear along the diagonal.
    pub fn new(
        m: &CMatrix,
        cluster_tol: f64,
        order: impl Fn(&[C64]) -> Vec<usize>,
    ) -> Result<Self> {
        let dim = ensure_square(m)?;
        let scale = super::max_abs(m).max(1.0);
        let (mut q, mut t) = if is_upper_triangular(m, 1e-14 * scale) {
            let mut t = m.clone();
            for i in 0..dim {
                for j in 0..i {
                    t[(i, j)] = C64::new(0.0, 0.0);
                }
            }
            (identity(dim), t)
        } else {
            let schur = Schur::try_new(m.clone(), 1e-15, 10_000)
                .ok_or_else(|| Error::Conditioning("Schur iteration did not converge".into()))?;
            let (q, mut t) = schur.unpack();
            for i in 0..dim {
                for j in 0..i {
                    t[(i, j)] = C64::new(0.0, 0.0);
                }
            }
            (q, t)
        };

        let diagonal: Vec<C64> = (0..dim).map(|i| t[(i, i)]).collect();
        let (mut ids, reps) = cluster(&diagonal, cluster_tol);

        let perm = order(&reps);
        let mut rank = vec![0usize; reps.len()];
        for (pos, &c) in perm.iter().enumerate() {
            rank[c] = pos;
        }
        // bubble sort with adjacent unitary swaps
        let mut swapped = true;
        while swapped {
            swapped = false;
            for k in 0..dim.saturating_sub(1) {
                if rank[ids[k]] > rank[ids[k + 1]] {
                    swap_adjacent(&mut t, &mut q, k);
                    ids.swap(k, k + 1);
                    swapped = true;
                }
            }
        }
        Ok(Self { q, t, ids, reps })
    }

    /// Contiguous `(start, len)` ranges of each cluster, in diagonal order.
    pub fn ranges(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<(usize, usize, usize)> = Vec::new();
        for (i, &id) in self.ids.iter().enumerate() {
            match out.last_mut() {
                Some((_, len, last)) if *last == id => *len += 1,
                _ => out.push((i, 1, id)),
            }
        }
        out
    }
}

/// Greedy single-linkage clustering of complex values.
pub(crate) fn cluster(values: &[C64], tol: f64) -> (Vec<usize>, Vec<C64>) {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = values[i].norm().max(values[j].norm()).max(1.0);
            if (values[i] - values[j]).norm() <= tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_to_id = std::collections::BTreeMap::new();
    let mut ids = vec![0; n];
    for (i, id) in ids.iter_mut().enumerate() {
        let r = find(&mut parent, i);
        let next = root_to_id.len();
        *id = *root_to_id.entry(r).or_insert(next);
    }
    let mut sums = vec![C64::new(0.0, 0.0); root_to_id.len()];
    let mut counts = vec![0usize; root_to_id.len()];
    for (i, &id) in ids.iter().enumerate() {
        sums[id] += values[i];
        counts[id] += 1;
    }
    let reps = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    (ids, reps)
}

/// Swaps diagonal entries `k`, `k+1` of the upper triangular `t` by a
/// unitary rotation, updating `q` so that `q t q^H` is unchanged.
fn swap_adjacent(t: &mut CMatrix, q: &mut CMatrix, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let c = t[(k + 1, k + 1)];
    let x0 = b;
    let x1 = c - a;
    let norm = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if norm == 0.0 {
        return;
    }
    let (cs, sn) = (x0 / norm, x1 / norm);
    // columns of g: (cs, sn) and (-conj(sn), conj(cs))
    let g = [[cs, -sn.conj()], [sn, cs.conj()]];
    let dim = t.nrows();
    for j in 0..dim {
        let (r0, r1) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = g[0][0].conj() * r0 + g[1][0].conj() * r1;
        t[(k + 1, j)] = g[0][1].conj() * r0 + g[1][1].conj() * r1;
    }
    for i in 0..dim {
        let (c0, c1) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = c0 * g[0][0] + c1 * g[1][0];
        t[(i, k + 1)] = c0 * g[0][1] + c1 * g[1][1];
        let (q0, q1) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = q0 * g[0][0] + q1 * g[1][0];
        q[(i, k + 1)] = q0 * g[0][1] + q1 * g[1][1];
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
}

/// Solves `a X − X b = c` for upper triangular `a` (p×p) and `b` (q×q)
/// with disjoint spectra.
pub fn sylvester_triangular(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    let (p, q) = (a.nrows(), b.nrows());
    if c.shape() != (p, q) {
        return Err(Error::Dimension("sylvester right-hand side".into()));
    }
    let scale = super::max_abs(a).max(super::max_abs(b)).max(1.0);
    let mut x = CMatrix::zeros(p, q);
    for j in 0..q {
        let mut rhs: Vec<C64> = (0..p).map(|i| c[(i, j)]).collect();
        for l in 0..j {
            for (i, r) in rhs.iter_mut().enumerate() {
                *r += x[(i, l)] * b[(l, j)];
            }
        }
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for k in (i + 1)..p {
                acc -= a[(i, k)] * x[(k, j)];
            }
            let pivot = a[(i, i)] - b[(j, j)];
            if pivot.norm() <= 1e-13 * scale {
                return Err(Error::Conditioning(format!(
                    "Sylvester equation with coinciding eigenvalues {} and {}",
                    a[(i, i)],
                    b[(j, j)]
                )));
            }
            x[(i, j)] = acc / pivot;
        }
    }
    Ok(x)
}

/// Similarity `basis⁻¹ M basis = blocks` where `blocks` is block diagonal,
/// one upper triangular block per eigenvalue cluster.
pub struct ClusteredSchur {
    pub basis: CMatrix,
    pub blocks: CMatrix,
    /// `(start, len, representative)` per cluster, in diagonal order.
    pub clusters: Vec<(usize, usize, C64)>,
}

impl ClusteredSchur {
    pub fn new(
        m: &CMatrix,
        cluster_tol: f64,
        order: impl Fn(&[C64]) -> Vec<usize>,
    ) -> Result<Self> {
        let sorted = SortedSchur::new(m, cluster_tol, order)?;
        let ranges = sorted.ranges();
        let dim = m.nrows();
        let mut t = sorted.t.clone();
        let mut s = identity(dim);
        for &(start, len, _) in &ranges {
            let rest = start + len;
            if rest >= dim {
                break;
            }
            let rlen = dim - rest;
            let a = t.view((start, start), (len, len)).clone_owned();
            let b = t.view((rest, rest), (rlen, rlen)).clone_owned();
            let c = -t.view((start, rest), (len, rlen)).clone_owned();
            let x = sylvester_triangular(&a, &b, &c)?;
            t.view_mut((start, rest), (len, rlen)).fill(C64::new(0.0, 0.0));
            let update = s.view((0, start), (dim, len)) * &x;
            let mut cols = s.view_mut((0, rest), (dim, rlen));
            cols += update;
        }
        let clusters = ranges
            .iter()
            .map(|&(start, len, id)| (start, len, sorted.reps[id]))
            .collect();
        Ok(Self {
            basis: sorted.q * s,
            blocks: t,
            clusters,
        })
    }
}
