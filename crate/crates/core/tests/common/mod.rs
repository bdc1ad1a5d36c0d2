//! Random generators shared by the integration tests.
#![allow(dead_code)]

pub mod gaussian;

use isolab::braid::RepTuple;
use isolab::connection::GermConnection;
use isolab::linalg::{expm, identity, CMatrix};
use isolab::{Tolerances, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn crand(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, r: f64) -> CMatrix {
    CMatrix::from_fn(m, m, |_, _| crand(rng, r))
}

/// Well conditioned random matrix `I + 0.3 R`.
pub fn near_identity(rng: &mut ChaCha8Rng, m: usize) -> CMatrix {
    identity(m) + random_matrix(rng, m, 0.3)
}

/// Random unitary matrix from the QR factorization of a random matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, m: usize) -> CMatrix {
    random_matrix(rng, m, 1.0).qr().q()
}

pub fn random_invertible(rng: &mut ChaCha8Rng, m: usize) -> CMatrix {
    loop {
        let a = random_matrix(rng, m, 1.0);
        if isolab::linalg::normalized_det(&a) > 1e-2 {
            return a;
        }
    }
}

/// Random tuple of invertible matrices, optionally closed up so that the
/// ordered product is the identity.
pub fn random_tuple(rng: &mut ChaCha8Rng, n: usize, m: usize, closed: bool) -> RepTuple {
    let mut mats: Vec<CMatrix> = (0..n).map(|_| random_invertible(rng, m)).collect();
    if closed {
        let head = mats[..n - 1].iter().fold(identity(m), |acc, a| acc * a);
        mats[n - 1] = head.try_inverse().unwrap();
    }
    RepTuple { n, m, product_constraint: false, matrices: mats }
}

/// Closed tuple whose members are unitary matrices perturbed by `I + 0.3R`,
/// so every member and its inverse stay well conditioned.
pub fn tame_closed_tuple(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RepTuple {
    let mut mats: Vec<CMatrix> = (0..n).map(|_| random_unitary(rng, m) * near_identity(rng, m)).collect();
    let head = mats[..n - 1].iter().fold(identity(m), |acc, a| acc * a);
    mats[n - 1] = head.try_inverse().unwrap();
    RepTuple { n, m, product_constraint: false, matrices: mats }
}

/// Random unitary tuple with product one.
pub fn random_unitary_tuple(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RepTuple {
    let mut mats: Vec<CMatrix> = (0..n).map(|_| random_unitary(rng, m)).collect();
    let head = mats[..n - 1].iter().fold(identity(m), |acc, a| acc * a);
    mats[n - 1] = head.adjoint();
    RepTuple::new(mats, true, &Tolerances::default()).unwrap()
}

/// Random germ of size `≤ 4` and degree `≤ 6` whose constant term has
/// integer eigenvalue gaps at most 4, possibly with Jordan blocks of size 2.
pub fn random_germ(rng: &mut ChaCha8Rng) -> GermConnection {
    let m = rng.gen_range(1..=4);
    let classes = rng.gen_range(1..=m);
    let bases: Vec<C64> = (0..classes)
        .map(|c| C64::new(rng.gen_range(-1.0..1.0), 0.45 * c as f64 + rng.gen_range(0.0..0.1)))
        .collect();
    let mut eig: Vec<C64> = (0..m)
        .map(|_| bases[rng.gen_range(0..classes)] + C64::new(rng.gen_range(0..=4) as f64, 0.0))
        .collect();
    let mut j = CMatrix::zeros(m, m);
    let mut u = 0;
    while u < m {
        if u + 1 < m && rng.gen_bool(0.3) {
            eig[u + 1] = eig[u];
            j[(u, u + 1)] = C64::new(1.0, 0.0);
            j[(u, u)] = eig[u];
            j[(u + 1, u + 1)] = eig[u];
            u += 2;
        } else {
            j[(u, u)] = eig[u];
            u += 1;
        }
    }
    let spread = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .filter(|&(a, b)| ((eig[a] - eig[b]).im).abs() < 1e-12)
        .map(|(a, b)| (eig[a].re - eig[b].re).round() as usize)
        .max()
        .unwrap_or(0);
    let s = near_identity(rng, m);
    let a0 = &s * j * s.clone().try_inverse().unwrap();
    let d = rng.gen_range(spread.max(1)..=6);
    let mut coeffs = vec![a0];
    for _ in 0..d {
        coeffs.push(random_matrix(rng, m, 0.5));
    }
    GermConnection::new(coeffs).unwrap()
}

/// Random family of pairwise commuting invertible matrices: polynomials in
/// one matrix with a random Jordan structure, conjugated by a random basis.
pub fn commuting_family(rng: &mut ChaCha8Rng, count: usize) -> Vec<CMatrix> {
    let m = rng.gen_range(1..=4);
    let mut x = CMatrix::zeros(m, m);
    for u in 0..m {
        x[(u, u)] = C64::new(rng.gen_range(0.05..0.95), rng.gen_range(-0.5..0.5));
        if u + 1 < m && rng.gen_bool(0.4) {
            x[(u + 1, u + 1)] = x[(u, u)];
            x[(u, u + 1)] = crand(rng, 1.0);
        }
    }
    let s = near_identity(rng, m);
    let sinv = s.clone().try_inverse().unwrap();
    (0..count)
        .map(|_| {
            let c0 = C64::new(rng.gen_range(0.05..0.95), 0.0);
            let c1 = crand(rng, 0.4);
            let r = identity(m) * c0 + &x * c1;
            &s * expm(&(r * C64::new(0.0, 2.0 * PI))) * &sinv
        })
        .collect()
}
