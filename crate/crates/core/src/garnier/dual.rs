//! Forward-mode dual numbers over the complex field, used to differentiate
//! the Hamiltonians with respect to the apparent singularities.

use crate::C64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to evaluate the Hamiltonians.
pub trait Scalar:
    Copy
    + From<C64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn value(self) -> C64;

    fn constant(z: f64) -> Self {
        Self::from(C64::new(z, 0.0))
    }
}

impl Scalar for C64 {
    fn value(self) -> C64 {
        self
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: C64,
    pub eps: C64,
}

impl Dual {
    pub fn new(re: C64, eps: C64) -> Self {
        Self { re, eps }
    }

    pub fn variable(re: C64) -> Self {
        Self::new(re, C64::new(1.0, 0.0))
    }
}

impl From<C64> for Dual {
    fn from(re: C64) -> Self {
        Self::new(re, C64::new(0.0, 0.0))
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        Self::new(self.re * inv, (self.eps * o.re - self.re * o.eps) * inv * inv)
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl Scalar for Dual {
    fn value(self) -> C64 {
        self.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_rule() {
        let z = C64::new(0.3, -1.2);
        let x = Dual::variable(z);
        let one = Dual::constant(1.0);
        let f = (x * x + one) / (x - Dual::constant(2.0));
        let exact = ((z * z + 1.0) / (z - 2.0), (2.0 * z * (z - 2.0) - (z * z + 1.0)) / ((z - 2.0) * (z - 2.0)));
        assert!((f.re - exact.0).norm() < 1e-14);
        assert!((f.eps - exact.1).norm() < 1e-14);
    }
}
