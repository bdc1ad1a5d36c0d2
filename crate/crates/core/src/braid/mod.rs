//! Braid group action on tuples of monodromy matrices and orbit enumeration
//! modulo simultaneous conjugation.
//!
//! Convention: the Artin generator `σ_i` replaces the adjacent pair
//! `(A, B)` at positions `i, i+1` by `(A B A⁻¹, A)`, and `σ_i⁻¹` replaces it
//! by `(B, B⁻¹ A B)`. Words act letter by letter from left to right.

mod orbit;

pub use orbit::{orbit_bfs, GeneratorImage, OrbitKind, OrbitVerdict};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, commutant_basis, expm, identity, inverse, normalized_det, rel_diff, CMatrix};
use crate::C64;
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};

/// `n` invertible `m×m` matrices, the images of simple loops around `n`
/// punctures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepTuple {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub product_constraint: bool,
    #[serde(with = "crate::json::matrix_vec")]
    pub matrices: Vec<CMatrix>,
}

impl RepTuple {
    /// Builds and validates a tuple.
    pub fn new(matrices: Vec<CMatrix>, product_constraint: bool, tol: &Tolerances) -> Result<Self> {
        let t = Self {
            n: matrices.len(),
            m: matrices.first().map_or(0, |a| a.nrows()),
            product_constraint,
            matrices,
        };
        t.validate(tol)?;
        Ok(t)
    }

    /// Rank-zero tuple with `n` entries, the neutral element for
    /// [`direct_sum`].
    pub fn placeholder(n: usize) -> Self {
        Self {
            n,
            m: 0,
            product_constraint: true,
            matrices: vec![CMatrix::zeros(0, 0); n],
        }
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Invalid(format!("a tuple needs at least 3 punctures, got {}", self.n)));
        }
        if self.matrices.len() != self.n {
            return Err(Error::Dimension(format!(
                "declared n = {} but {} matrices given",
                self.n,
                self.matrices.len()
            )));
        }
        for (j, a) in self.matrices.iter().enumerate() {
            if a.shape() != (self.m, self.m) {
                return Err(Error::Dimension(format!(
                    "matrix {} has shape {:?}, expected {}x{}",
                    j + 1,
                    a.shape(),
                    self.m,
                    self.m
                )));
            }
            if self.m > 0 && normalized_det(a) <= tol.singular {
                return Err(Error::Invalid(format!("matrix {} is not invertible", j + 1)));
            }
        }
        if self.product_constraint {
            let defect = rel_diff(&self.product(), &identity(self.m));
            if defect > tol.eq {
                return Err(Error::Invalid(format!(
                    "ordered product differs from the identity by {defect:e}"
                )));
            }
        }
        Ok(())
    }

    /// Ordered product `M_1 ⋯ M_n`.
    pub fn product(&self) -> CMatrix {
        self.matrices.iter().fold(identity(self.m), |acc, a| acc * a)
    }

    /// Simultaneous conjugation `g⁻¹ M_j g`.
    pub fn conjugate_by(&self, g: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let ginv = inverse(g, tol.singular)?;
        Ok(Self {
            matrices: self.matrices.iter().map(|a| &ginv * a * g).collect(),
            ..self.clone()
        })
    }

    /// A simultaneous conjugate `h⁻¹ M_j h` of smaller total Frobenius norm,
    /// together with `h`.
    ///
    /// Runs a descent on `Σ‖M_j‖²` along positive Hermitian conjugators;
    /// for a semisimple tuple the limit is the norm-minimizing point of the
    /// class. The accumulated `h` is kept within a condition bound so the
    /// result is always an accurate conjugate.
    pub fn balanced(&self) -> (Self, CMatrix) {
        let m = self.m;
        let mut h = identity(m);
        let mut h_inv = identity(m);
        let mut cur = self.matrices.clone();
        let total = |ms: &[CMatrix]| ms.iter().map(|a| a.norm_squared()).sum::<f64>();
        let mut f = total(&cur);
        let mut step = 1.0;
        for _ in 0..200 {
            let mut mu = CMatrix::zeros(m, m);
            for a in &cur {
                let ad = a.adjoint();
                mu += a * &ad - &ad * a;
            }
            if f == 0.0 || mu.norm() <= 1e-12 * f {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let gen = &mu * C64::new(-step / f, 0.0);
                let p = expm(&gen);
                let p_inv = expm(&(-&gen));
                let next: Vec<CMatrix> = cur.iter().map(|a| &p * a * &p_inv).collect();
                let f_next = total(&next);
                if f_next < f {
                    let h_next = &h * &p_inv;
                    let hi_next = &p * &h_inv;
                    if h_next.norm() * hi_next.norm() > 1e6 {
                        return self.finish_balance(cur, h);
                    }
                    cur = next;
                    h = h_next;
                    h_inv = hi_next;
                    accepted = f_next < f * (1.0 - 1e-14);
                    f = f_next;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.finish_balance(cur, h)
    }

    fn finish_balance(&self, matrices: Vec<CMatrix>, h: CMatrix) -> (Self, CMatrix) {
        (
            Self {
                matrices,
                ..self.clone()
            },
            h,
        )
    }
}

/// Word in the Artin generators; each letter is `(i, ±1)` with `1 ≤ i ≤ n−1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BraidWord {
    pub letters: Vec<(usize, i8)>,
}

impl BraidWord {
    pub fn new(letters: Vec<(usize, i8)>) -> Self {
        Self { letters }
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|&(i, e)| (i, -e)).collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Self { letters }
    }
}

fn invert(a: &CMatrix) -> Result<CMatrix> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular { det: crate::linalg::determinant(a).norm() })
}

/// Acts on `tuple` by `word`.
pub fn apply_braid(word: &BraidWord, tuple: &RepTuple) -> Result<RepTuple> {
    let n = tuple.matrices.len();
    if let Some(&(i, _)) = word.letters.iter().find(|(i, _)| *i == 0 || *i >= n) {
        return Err(Error::IndexOutOfRange { index: i, max: n.saturating_sub(1) });
    }
    if let Some(&(_, e)) = word.letters.iter().find(|(_, e)| *e != 1 && *e != -1) {
        return Err(Error::Invalid(format!("braid exponent must be ±1, got {e}")));
    }
    let mut mats = tuple.matrices.clone();
    for &(i, e) in &word.letters {
        let (a, b) = (mats[i - 1].clone(), mats[i].clone());
        if e > 0 {
            mats[i - 1] = &a * &b * invert(&a)?;
            mats[i] = a;
        } else {
            mats[i] = invert(&b)? * &a * &b;
            mats[i - 1] = b;
        }
    }
    Ok(RepTuple {
        matrices: mats,
        ..tuple.clone()
    })
}

/// The `n(n−1)/2` standard generators `A_ij`, `1 ≤ i < j ≤ n`, of the pure
/// braid group, ordered lexicographically in `(i, j)`.
///
/// `A_ij = (σ_{j−1} ⋯ σ_{i+1}) σ_i² (σ_{j−1} ⋯ σ_{i+1})⁻¹`.
pub fn pure_braid_generators(n: usize) -> Vec<BraidWord> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 1..n {
        for j in (i + 1)..=n {
            let conj: Vec<(usize, i8)> = ((i + 1)..j).rev().map(|k| (k, 1)).collect();
            let conj = BraidWord::new(conj);
            let middle = BraidWord::new(vec![(i, 1), (i, 1)]);
            out.push(conj.concat(&middle).concat(&conj.inverse()));
        }
    }
    out
}

/// Blockwise direct sum `diag(a_j, b_j)` at every index.
pub fn direct_sum(a: &RepTuple, b: &RepTuple) -> Result<RepTuple> {
    if a.matrices.len() != b.matrices.len() {
        return Err(Error::Dimension(format!(
            "direct sum of tuples with {} and {} entries",
            a.matrices.len(),
            b.matrices.len()
        )));
    }
    Ok(RepTuple {
        n: a.n,
        m: a.m + b.m,
        product_constraint: a.product_constraint && b.product_constraint,
        matrices: a
            .matrices
            .iter()
            .zip(&b.matrices)
            .map(|(x, y)| block_diag(x, y))
            .collect(),
    })
}

/// Whether the tuple has only scalar matrices in its commutant.
pub fn is_irreducible(tuple: &RepTuple, tol: &Tolerances) -> Result<bool> {
    if tuple.m == 0 {
        return Ok(false);
    }
    Ok(commutant_basis(&tuple.matrices, tol)?.len() == 1)
}
