use crate::linalg::{identity, normalized_det, CMatrix};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Matrix Laurent polynomial `G(w) = Σ_{k ≥ k0} G_k w^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatLaurent {
    pub m: usize,
    pub k0: i64,
    #[serde(with = "crate::json::matrix_vec")]
    pub coeffs: Vec<CMatrix>,
}

/// Gauge transforms `Y = G(w) Z`: holomorphic ones come out of the normal
/// form, meromorphic ones witness non-mildness.
pub type GaugeTransform = MatLaurent;

impl MatLaurent {
    pub fn constant(g: CMatrix) -> Self {
        Self { m: g.nrows(), k0: 0, coeffs: vec![g] }
    }

    pub fn identity(m: usize) -> Self {
        Self::constant(identity(m))
    }

    /// `I + p w^k`.
    pub fn elementary(p: &CMatrix, k: usize) -> Self {
        let m = p.nrows();
        let mut coeffs = vec![CMatrix::zeros(m, m); k + 1];
        coeffs[0] = identity(m);
        coeffs[k] += p;
        Self { m, k0: 0, coeffs }
    }

    pub fn zero(m: usize) -> Self {
        Self { m, k0: 0, coeffs: Vec::new() }
    }

    /// Largest exponent carried (meaningless when empty).
    pub fn top(&self) -> i64 {
        self.k0 + self.coeffs.len() as i64 - 1
    }

    /// Coefficient of `w^k` (zero outside the stored range).
    pub fn coeff(&self, k: i64) -> CMatrix {
        let idx = k - self.k0;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            CMatrix::zeros(self.m, self.m)
        } else {
            self.coeffs[idx as usize].clone()
        }
    }

    /// Adds `a w^k` in place, extending the stored range if needed.
    pub fn add_term(&mut self, k: i64, a: &CMatrix) {
        if self.coeffs.is_empty() {
            self.k0 = k;
            self.coeffs.push(a.clone());
            return;
        }
        if k < self.k0 {
            let pad = (self.k0 - k) as usize;
            let mut coeffs = vec![CMatrix::zeros(self.m, self.m); pad];
            coeffs.append(&mut self.coeffs);
            self.coeffs = coeffs;
            self.k0 = k;
        }
        let idx = (k - self.k0) as usize;
        if idx >= self.coeffs.len() {
            self.coeffs.resize(idx + 1, CMatrix::zeros(self.m, self.m));
        }
        self.coeffs[idx] += a;
    }

    /// Product, dropping every exponent above `max_deg` when given.
    pub fn mul(&self, other: &Self, max_deg: Option<i64>) -> Self {
        let mut out = Self::zero(self.m);
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = self.k0 + other.k0 + (i + j) as i64;
                if max_deg.is_some_and(|d| k > d) {
                    break;
                }
                out.add_term(k, &(a * b));
            }
        }
        out.trimmed(0.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (j, b) in other.coeffs.iter().enumerate() {
            out.add_term(other.k0 + j as i64, &(-b));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (j, b) in other.coeffs.iter().enumerate() {
            out.add_term(other.k0 + j as i64, b);
        }
        out
    }

    /// `w dG/dw`.
    pub fn euler_derivative(&self) -> Self {
        Self {
            m: self.m,
            k0: self.k0,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, g)| g * C64::new((self.k0 + i as i64) as f64, 0.0))
                .collect(),
        }
    }

    /// Drops leading and trailing coefficients whose entries are all at most
    /// `abs_tol` in modulus.
    pub fn trimmed(mut self, abs_tol: f64) -> Self {
        let small = |g: &CMatrix| g.iter().all(|z| z.norm() <= abs_tol);
        while self.coeffs.last().is_some_and(small) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|g| small(g)).count();
        self.coeffs.drain(..lead);
        self.k0 += lead as i64;
        if self.coeffs.is_empty() {
            self.k0 = 0;
        }
        self
    }

    /// Keeps exponents `≤ max_deg`.
    pub fn truncated(mut self, max_deg: i64) -> Self {
        let keep = (max_deg - self.k0 + 1).max(0) as usize;
        self.coeffs.truncate(keep);
        self
    }

    pub fn eval(&self, w: C64) -> CMatrix {
        let mut out = CMatrix::zeros(self.m, self.m);
        for (i, g) in self.coeffs.iter().enumerate() {
            out += g * w.powi((self.k0 + i as i64) as i32);
        }
        out
    }

    /// Largest Frobenius norm of a coefficient.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    /// Holomorphic at 0 with holomorphic inverse: no negative powers and an
    /// invertible constant term.
    pub fn is_holomorphic(&self, singular_tol: f64) -> bool {
        let t = self.clone().trimmed(0.0);
        t.k0 >= 0 && normalized_det(&t.coeff(0)) > singular_tol
    }

    /// Inverse of `I + N` with `N = O(w)`, truncated at `max_deg`.
    pub fn unipotent_inverse(&self, max_deg: i64) -> Self {
        let id = Self::identity(self.m);
        let nil = self.sub(&id);
        let mut out = id.clone();
        let mut power = id;
        for _ in 0..max_deg.max(0) {
            power = power.mul(&nil, Some(max_deg)).scale(C64::new(-1.0, 0.0));
            if power.coeffs.is_empty() {
                break;
            }
            out = out.add(&power);
        }
        out
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            m: self.m,
            k0: self.k0,
            coeffs: self.coeffs.iter().map(|g| g * z).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_real_rows;

    #[test]
    fn unipotent_inverse_roundtrip() {
        let p = from_real_rows(&[&[0.3, 1.0], &[-0.5, 0.2]]);
        let g = MatLaurent::elementary(&p, 1);
        let inv = g.unipotent_inverse(5);
        let prod = g.mul(&inv, Some(5));
        assert_eq!(prod.k0, 0);
        assert!((prod.coeff(0) - identity(2)).norm() < 1e-15);
        for k in 1..=5 {
            assert!(prod.coeff(k).norm() < 1e-14);
        }
    }

    #[test]
    fn laurent_product_and_derivative() {
        let mut g = MatLaurent::zero(1);
        g.add_term(-2, &from_real_rows(&[&[1.0]]));
        g.add_term(1, &from_real_rows(&[&[2.0]]));
        let sq = g.mul(&g, None);
        assert_eq!(sq.k0, -4);
        assert_eq!(sq.coeff(-1)[(0, 0)], C64::new(4.0, 0.0));
        let d = g.euler_derivative();
        assert_eq!(d.coeff(-2)[(0, 0)], C64::new(-2.0, 0.0));
        assert!(!g.is_holomorphic(1e-12));
    }
}
