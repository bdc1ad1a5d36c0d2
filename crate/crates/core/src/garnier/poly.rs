use crate::error::{Error, Result};
use crate::C64;
use std::ops::{Add, Mul, Sub};

/// Dense complex polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `Π (z − r)` over the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut c = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Length of the coefficient vector minus one; no trimming.
    pub fn formal_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn deriv(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// The interpolating polynomial of degree `< nodes.len()`; fails when two
    /// nodes are closer than `min_gap`.
    pub fn lagrange(nodes: &[C64], values: &[C64], min_gap: f64) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::Dimension("interpolation nodes and values differ in length".into()));
        }
        let mut out = Self::zero();
        for (j, (&xj, &yj)) in nodes.iter().zip(values).enumerate() {
            let others: Vec<C64> = nodes
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &x)| x)
                .collect();
            let mut denom = C64::new(1.0, 0.0);
            for &x in &others {
                if (xj - x).norm() < min_gap {
                    return Err(Error::Conditioning(format!(
                        "interpolation nodes {xj} and {x} nearly coincide"
                    )));
                }
                denom *= xj - x;
            }
            out = &out + &Self::from_roots(&others).scale(yj / denom);
        }
        Ok(out)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut c = vec![C64::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_eval_and_derivative() {
        let r = [C64::new(1.0, 1.0), C64::new(-2.0, 0.5), C64::new(0.0, 3.0)];
        let p = Poly::from_roots(&r);
        for &x in &r {
            assert!(p.eval(x).norm() < 1e-13);
        }
        let z = C64::new(0.7, -0.2);
        let h = 1e-6;
        let fd = (p.eval(z + h) - p.eval(z - h)) / (2.0 * h);
        assert!((p.deriv().eval(z) - fd).norm() < 1e-8);
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let q = Poly::new(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)]);
        let nodes = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, -1.0)];
        let values: Vec<C64> = nodes.iter().map(|&x| q.eval(x)).collect();
        let fit = Poly::lagrange(&nodes, &values, 1e-12).unwrap();
        assert!((&fit - &q).max_abs() < 1e-13);
        assert!(Poly::lagrange(&[nodes[0], nodes[0]], &values[..2], 1e-12).is_err());
    }
}
