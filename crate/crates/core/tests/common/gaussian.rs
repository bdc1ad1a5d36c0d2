//! Exact pure-braid orbit enumeration for irreducible SL(2) tuples with
//! Gaussian-integer entries.
//!
//! Irreducible SL(2, C) tuples are determined up to simultaneous
//! conjugation by the traces of their words of length at most three, so
//! exact equality of those traces decides membership in a class.

use isolab::linalg::CMatrix;
use isolab::C64;
use std::collections::{HashSet, VecDeque};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gi(pub i64, pub i64);

impl Add for Gi {
    type Output = Gi;
    fn add(self, o: Gi) -> Gi {
        Gi(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for Gi {
    type Output = Gi;
    fn sub(self, o: Gi) -> Gi {
        Gi(self.0 - o.0, self.1 - o.1)
    }
}

impl Mul for Gi {
    type Output = Gi;
    fn mul(self, o: Gi) -> Gi {
        Gi(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
}

impl Neg for Gi {
    type Output = Gi;
    fn neg(self) -> Gi {
        Gi(-self.0, -self.1)
    }
}

pub type M2 = [[Gi; 2]; 2];

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[Gi(0, 0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Inverse of a determinant-one matrix.
pub fn inv(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    assert_eq!(det, Gi(1, 0), "oracle only handles SL(2)");
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

fn trace(a: &M2) -> Gi {
    a[0][0] + a[1][1]
}

/// `σ_i` on positions `i, i+1` (1-based): `(A, B) ↦ (A B A⁻¹, A)`.
fn sigma(t: &mut [M2], i: usize, positive: bool) {
    let (a, b) = (t[i - 1], t[i]);
    if positive {
        t[i - 1] = mul(&mul(&a, &b), &inv(&a));
        t[i] = a;
    } else {
        t[i] = mul(&mul(&inv(&b), &a), &b);
        t[i - 1] = b;
    }
}

/// `A_ij = (σ_{j−1} ⋯ σ_{i+1}) σ_i² (σ_{j−1} ⋯ σ_{i+1})⁻¹`, letters applied
/// left to right.
fn apply_pure(t: &[M2], i: usize, j: usize) -> Vec<M2> {
    let mut out = t.to_vec();
    let conj: Vec<usize> = (i + 1..j).rev().collect();
    for &k in &conj {
        sigma(&mut out, k, true);
    }
    sigma(&mut out, i, true);
    sigma(&mut out, i, true);
    for &k in conj.iter().rev() {
        sigma(&mut out, k, false);
    }
    out
}

fn class_key(t: &[M2]) -> Vec<Gi> {
    let n = t.len();
    let mut key: Vec<Gi> = t.iter().map(trace).collect();
    for i in 0..n {
        for j in i + 1..n {
            key.push(trace(&mul(&t[i], &t[j])));
            for k in j + 1..n {
                key.push(trace(&mul(&mul(&t[i], &t[j]), &t[k])));
            }
        }
    }
    key
}

/// Size of the pure-braid orbit of the class of `seed`.
pub fn orbit_size(seed: &[M2]) -> usize {
    let n = seed.len();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(class_key(seed));
    queue.push_back(seed.to_vec());
    while let Some(t) = queue.pop_front() {
        for i in 1..n {
            for j in i + 1..=n {
                let img = apply_pure(&t, i, j);
                if seen.insert(class_key(&img)) {
                    queue.push_back(img);
                }
            }
        }
    }
    seen.len()
}

pub fn to_cmatrix(a: &M2) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| C64::new(a[i][j].0 as f64, a[i][j].1 as f64))
}

/// `iσ_x`, `iσ_y`, `iσ_z`.
pub fn quaternion_units() -> (M2, M2, M2) {
    let z = Gi(0, 0);
    let i = Gi(0, 1);
    let x = [[z, i], [i, z]];
    let y = [[z, Gi(1, 0)], [Gi(-1, 0), z]];
    let zz = [[i, z], [z, -i]];
    (x, y, zz)
}

pub fn neg(a: &M2) -> M2 {
    [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]]
}

pub fn one() -> M2 {
    let (z, o) = (Gi(0, 0), Gi(1, 0));
    [[o, z], [z, o]]
}
