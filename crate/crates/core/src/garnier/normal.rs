use super::hamiltonian::basis_numerator;
use super::poly::Poly;
use super::{coeffs_to_theta_n, GarnierConfig, PhasePoint};
use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Rational data `a = q_a/φ`, `b = q_b/φ`, `c = ψ/φ` of a normalized rank-two
/// logarithmic connection, with `φ = z(z−1)Π(z−t_i)` and `ψ = Π(z−λ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTriple {
    pub t: Vec<C64>,
    pub lambda: Vec<C64>,
    pub phi: Poly,
    pub psi: Poly,
    pub q_a: Poly,
    pub q_b: Poly,
    pub theta_n: C64,
}

impl RationalTriple {
    pub fn a(&self, z: C64) -> C64 {
        self.q_a.eval(z) / self.phi.eval(z)
    }

    pub fn b(&self, z: C64) -> C64 {
        self.q_b.eval(z) / self.phi.eval(z)
    }

    pub fn c(&self, z: C64) -> C64 {
        self.psi.eval(z) / self.phi.eval(z)
    }

    /// `τ = (c'/c + b) / (2c)`.
    pub fn tau(&self, z: C64) -> C64 {
        let log_dc = self.psi.deriv().eval(z) / self.psi.eval(z) - self.phi.deriv().eval(z) / self.phi.eval(z);
        (log_dc + self.b(z)) / (2.0 * self.c(z))
    }

    /// Coefficients of `ξ⁻¹` and `ξ⁰` in `b dz` written in `ξ = 1/z`.
    pub fn b_at_infinity(&self) -> (C64, C64) {
        let top = self.phi.formal_degree();
        let beta = self.q_b.coeff(top - 1);
        let beta_next = self.q_b.coeff(top - 2);
        let phi_next = self.phi.coeff(top - 1);
        (-beta, -(beta_next - beta * phi_next))
    }

    /// The numerator of `p = ¾(c'/c)² − c''/(2c) − b'/2 + (b/2)(c'/c) + b²/4 − ac`
    /// over `φ²ψ²`.
    pub fn potential_numerator(&self) -> Poly {
        let (phi, psi, qa, qb) = (&self.phi, &self.psi, &self.q_a, &self.q_b);
        let dphi = phi.deriv();
        let k = &(&psi.deriv() * phi) - &(&dphi * psi);
        let psi2 = psi * psi;
        let half = C64::new(0.5, 0.0);
        let mut num = (&k * &k).scale(C64::new(0.75, 0.0));
        let inner = &(&(&k.deriv() * phi) * psi) - &(&(&k * &dphi) * psi).scale(C64::new(2.0, 0.0));
        num = &num - &inner.scale(half);
        let db = &(&qb.deriv() * phi) - &(qb * &dphi);
        num = &num - &(&db * &psi2).scale(half);
        num = &num + &(&(qb * &k) * psi).scale(half);
        num = &num + &(&(qb * qb) * &psi2).scale(C64::new(0.25, 0.0));
        num = &num - &(qa * &(&psi2 * psi));
        num
    }

    /// Value and first derivative of [`Self::potential_numerator`] at `x0`,
    /// computed from local expansions of the factors rather than the
    /// expanded polynomial.
    pub fn numerator_jet(&self, x0: C64) -> (C64, C64) {
        let mut poles = self.t.clone();
        poles.push(C64::new(0.0, 0.0));
        poles.push(C64::new(1.0, 0.0));
        let phi = Jet::from_roots(&poles, x0);
        let psi = Jet::from_roots(&self.lambda, x0);
        let qa = Jet::of_poly(&self.q_a, x0);
        let qb = Jet::of_poly(&self.q_b, x0);
        let dphi = phi.deriv();
        let k = psi.deriv() * phi - dphi * psi;
        let psi2 = psi * psi;
        let db = qb.deriv() * phi - qb * dphi;
        let num = k * k * 0.75 - (k.deriv() * phi * psi - k * dphi * psi * 2.0) * 0.5 - db * psi2 * 0.5
            + qb * k * psi * 0.5
            + qb * qb * psi2 * 0.25
            - qa * psi2 * psi;
        (num.0[0], num.0[1])
    }
}

/// Taylor coefficients up to third order at a fixed centre.
#[derive(Debug, Clone, Copy)]
struct Jet([C64; 4]);

impl Jet {
    fn from_roots(roots: &[C64], x0: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        roots
            .iter()
            .fold(Jet([one, zero, zero, zero]), |acc, &r| acc * Jet([x0 - r, one, zero, zero]))
    }

    fn of_poly(p: &Poly, x0: C64) -> Self {
        // repeated synthetic division
        let mut c = p.coeffs.clone();
        let mut out = [C64::new(0.0, 0.0); 4];
        for slot in out.iter_mut() {
            if c.is_empty() {
                break;
            }
            let mut acc = C64::new(0.0, 0.0);
            let mut quotient = vec![C64::new(0.0, 0.0); c.len() - 1];
            for k in (0..c.len()).rev() {
                acc = acc * x0 + c[k];
                if k > 0 {
                    quotient[k - 1] = acc;
                }
            }
            *slot = acc;
            c = quotient;
        }
        Jet(out)
    }

    fn deriv(self) -> Self {
        let c = self.0;
        Jet([c[1], c[2] * 2.0, c[3] * 3.0, C64::new(0.0, 0.0)])
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [C64::new(0.0, 0.0); 4];
        for i in 0..4 {
            for j in 0..4 - i {
                out[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Jet(out)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        Jet(self.0.map(|c| c * s))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

/// Builds the normalized triple whose associated potential has double-pole
/// coefficients `a_i` at the essential poles, residue `−ν_i` at `λ_i` and
/// exponent `θ_n` at infinity.
///
/// `theta_n` defaults to the configured exponent; any root of the quadratic
/// fixed by `a_{N+3}` is accepted.
pub fn normalized_form(
    config: &GarnierConfig,
    phase: &PhasePoint,
    theta_n: Option<C64>,
    tol: &Tolerances,
) -> Result<RationalTriple> {
    phase.validate(config, tol)?;
    let n = config.n_params;
    let a = config.coeffs();
    let theta_n = match theta_n {
        None => config.theta_n(),
        Some(th) => {
            let (r1, r2) = coeffs_to_theta_n(&a);
            let close = |r: C64| (r - th).norm() <= 1e-8 * th.norm().max(1.0);
            if !close(r1) && !close(r2) {
                return Err(Error::Invalid(format!("θ_n = {th} is not compatible with the coefficients")));
            }
            th
        }
    };
    let poles = phase.essential_poles();
    let phi = Poly::from_roots(&poles);
    let psi = Poly::from_roots(&phase.lambda);
    let dphi = phi.deriv();
    let gap = tol.separation;

    // b: leading part fixed at infinity, the rest by the residues at λ
    let e1: C64 = poles.iter().sum();
    let mut lead = vec![C64::new(0.0, 0.0); n + 2];
    lead[n + 1] = theta_n;
    lead[n] = -theta_n * e1;
    let lead = Poly::new(lead);
    let targets: Vec<C64> = (0..n)
        .map(|i| {
            let li = phase.lambda[i];
            let phi_l = phi.eval(li);
            let kappa: C64 = (0..n)
                .filter(|&m| m != i)
                .map(|m| 1.0 / (li - phase.lambda[m]))
                .sum::<C64>()
                - dphi.eval(li) / phi_l;
            phi_l * (-2.0 * phase.nu[i] - kappa) - lead.eval(li)
        })
        .collect();
    let q_b = &lead + &Poly::lagrange(&phase.lambda, &targets, gap)?;

    // a: principal parts at the essential poles
    let values: Vec<C64> = poles
        .iter()
        .enumerate()
        .map(|(j, &tj)| {
            let dp = dphi.eval(tj);
            let beta = q_b.eval(tj) / dp;
            let gamma = psi.eval(tj) / dp;
            let theta_sq = 4.0 * a[j] + 1.0;
            dp * (beta * beta - theta_sq) / (4.0 * gamma)
        })
        .collect();
    let q_a = Poly::lagrange(&poles, &values, gap)?;

    Ok(RationalTriple {
        t: phase.t.clone(),
        lambda: phase.lambda.clone(),
        phi,
        psi,
        q_a,
        q_b,
        theta_n,
    })
}

/// Coordinates of a potential in the partial-fraction basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCoefficients {
    /// `a_1, …, a_{N+3}`.
    #[serde(with = "crate::json::complex_vec")]
    pub a: Vec<C64>,
    /// Residues at `t_i`.
    #[serde(rename = "L", with = "crate::json::complex_vec")]
    pub l: Vec<C64>,
    /// Minus the residues at `λ_i`.
    #[serde(with = "crate::json::complex_vec")]
    pub nu: Vec<C64>,
    /// Coefficients of `1/(z − λ_i)²`.
    #[serde(with = "crate::json::complex_vec")]
    pub lambda_double: Vec<C64>,
}

/// Decomposes `num / (φ²ψ²)` in the partial-fraction basis.
pub fn extract_coefficients(num: &Poly, t: &[C64], lambda: &[C64], tol: &Tolerances) -> Result<BasisCoefficients> {
    let dnum = num.deriv();
    extract_with(num, &|x| (num.eval(x), dnum.eval(x)), t, lambda, tol)
}

fn extract_with(
    num: &Poly,
    jet: &dyn Fn(C64) -> (C64, C64),
    t: &[C64],
    lambda: &[C64],
    tol: &Tolerances,
) -> Result<BasisCoefficients> {
    let n = t.len();
    if lambda.len() != n {
        return Err(Error::Dimension("t and lambda differ in length".into()));
    }
    let max_deg = 4 * n + 2;
    let scale = num.max_abs().max(1.0);
    if let Some(k) = (max_deg + 1..num.coeffs.len()).find(|&k| num.coeffs[k].norm() > tol.null_space * scale) {
        return Err(Error::Inconsistent(format!(
            "numerator has a degree {k} term beyond the basis degree {max_deg}"
        )));
    }
    let mut pts = t.to_vec();
    pts.push(C64::new(0.0, 0.0));
    pts.push(C64::new(1.0, 0.0));
    pts.extend_from_slice(lambda);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if (pts[i] - pts[j]).norm() < tol.separation {
                return Err(Error::Conditioning(format!(
                    "poles {} and {} nearly coincide",
                    super::point_label(i, n),
                    super::point_label(j, n)
                )));
            }
        }
    }
    // (double-pole coefficient, residue) at pts[j]
    let laurent = |j: usize| -> (C64, C64) {
        let x0 = pts[j];
        let mut h = C64::new(1.0, 0.0);
        let mut log_dh = C64::new(0.0, 0.0);
        for (r, &x) in pts.iter().enumerate() {
            if r != j {
                h *= (x0 - x) * (x0 - x);
                log_dh += 2.0 / (x0 - x);
            }
        }
        let (v, dv) = jet(x0);
        (v / h, (dv - v * log_dh) / h)
    };
    let mut a = Vec::with_capacity(n + 3);
    let mut l = Vec::with_capacity(n);
    let mut res_zero = C64::new(0.0, 0.0);
    for j in 0..n + 2 {
        let (d, r) = laurent(j);
        a.push(d);
        if j < n {
            l.push(r);
        } else if j == n {
            res_zero = r;
        }
    }
    let mut nu = Vec::with_capacity(n);
    let mut lambda_double = Vec::with_capacity(n);
    for k in 0..n {
        let (d, r) = laurent(n + 2 + k);
        lambda_double.push(d);
        nu.push(-r);
    }
    let accessory = -res_zero
        + (0..n).map(|i| (t[i] - 1.0) * l[i]).sum::<C64>()
        - (0..n).map(|i| (lambda[i] - 1.0) * nu[i]).sum::<C64>();
    a.push(accessory);

    let rebuilt = basis_numerator(&a, t, lambda, &nu, &l, &lambda_double);
    let defect = (&rebuilt - num).max_abs();
    if defect > 1e2 * tol.null_space * scale {
        return Err(Error::Inconsistent(format!(
            "basis expansion leaves a remainder of size {defect:.3e}"
        )));
    }
    Ok(BasisCoefficients { a, l, nu, lambda_double })
}

/// Expands the potential of a normalized triple in the partial-fraction
/// basis and checks that every `λ_i` carries the apparent double pole `¾`.
pub fn companion_extract(triple: &RationalTriple, tol: &Tolerances) -> Result<BasisCoefficients> {
    let num = triple.potential_numerator();
    let coeffs = extract_with(&num, &|x| triple.numerator_jet(x), &triple.t, &triple.lambda, tol)?;
    for (k, d) in coeffs.lambda_double.iter().enumerate() {
        if (d - 0.75).norm() > 1e-8 {
            return Err(Error::Inconsistent(format!(
                "double-pole coefficient at λ_{} is {d}, expected 3/4",
                k + 1
            )));
        }
    }
    Ok(coeffs)
}
