use super::dual::{Dual, Scalar};
use super::poly::Poly;
use super::{closest_pair, GarnierConfig, PhasePoint};
use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Which poles enter the `a_m/(λ_k − t_m)²` sum of the potential term `U_k`.
///
/// The apparency test (monodromy `−I` around every `λ_k`) singles out
/// [`UkConvention::AllPoles`]; the other reading is kept so the comparison
/// can be rerun.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UkConvention {
    /// Sum over all `N + 2` finite essential poles.
    #[default]
    AllPoles,
    /// Drop the pole `t_i` of the Hamiltonian `L_i` being evaluated.
    SkipOwnPole,
}

fn product<S: Scalar>(it: impl Iterator<Item = S>) -> S {
    it.fold(S::constant(1.0), |acc, x| acc * x)
}

fn sum<S: Scalar>(it: impl Iterator<Item = S>) -> S {
    it.fold(S::constant(0.0), |acc, x| acc + x)
}

/// `L_i = M_i Σ_k (M^{k,i} ν_k² − M^{k,i,0} ν_k − M^{k,i} U_k)`.
pub(crate) fn hamiltonians_generic<S: Scalar>(a: &[C64], t: &[S], lam: &[S], nu: &[S], conv: UkConvention) -> Vec<S> {
    let n = t.len();
    let mut poles: Vec<S> = t.to_vec();
    poles.push(S::constant(0.0));
    poles.push(S::constant(1.0));
    let psi = |z: S| product(lam.iter().map(|&l| z - l));
    let phi = |z: S| product(poles.iter().map(|&p| z - p));
    let dpsi = |k: usize| product(lam.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &l)| lam[k] - l));
    let dphi = |j: usize| product(poles.iter().enumerate().filter(|&(m, _)| m != j).map(|(_, &p)| poles[j] - p));
    let a_inf = S::from(a[n + 2]);
    let three_quarters = S::constant(0.75);

    (0..n)
        .map(|i| {
            let m_i = -psi(t[i]) / dphi(i);
            let inner = sum((0..n).map(|k| {
                let lk = lam[k];
                let m_ki = phi(lk) / ((lk - t[i]) * dpsi(k));
                let pole_sum = sum((0..n + 2).filter(|&m| m != i).map(|m| S::constant(1.0) / (lk - poles[m])));
                let lam_sum = sum((0..n).filter(|&m| m != k).map(|m| S::constant(1.0) / (lk - lam[m])));
                let m_ki0 = m_ki * (pole_sum - lam_sum);
                let u_poles = sum(
                    (0..n + 2)
                        .filter(|&m| conv == UkConvention::AllPoles || m != i)
                        .map(|m| {
                            let d = lk - poles[m];
                            S::from(a[m]) / (d * d)
                        }),
                );
                let u_lam = sum((0..n).filter(|&m| m != k).map(|m| {
                    let d = lk - lam[m];
                    three_quarters / (d * d)
                }));
                let u_k = a_inf / (lk * (lk - S::constant(1.0))) + u_poles + u_lam;
                m_ki * nu[k] * nu[k] - m_ki0 * nu[k] - m_ki * u_k
            }));
            m_i * inner
        })
        .collect()
}

fn check_phase(config: &GarnierConfig, phase: &PhasePoint, tol: &Tolerances) -> Result<()> {
    config.validate()?;
    let n = config.n_params;
    if phase.t.len() != n || phase.lambda.len() != n || phase.nu.len() != n {
        return Err(Error::Dimension(format!("phase point needs {n} entries in t, lambda and nu")));
    }
    if let Some(what) = closest_pair(&phase.t, &phase.lambda, tol.separation) {
        return Err(Error::Conditioning(what));
    }
    Ok(())
}

/// The Hamiltonians `L_1, …, L_N` at a phase point.
pub fn hamiltonians(config: &GarnierConfig, phase: &PhasePoint, tol: &Tolerances) -> Result<Vec<C64>> {
    hamiltonians_with(config, phase, UkConvention::AllPoles, tol)
}

pub fn hamiltonians_with(
    config: &GarnierConfig,
    phase: &PhasePoint,
    conv: UkConvention,
    tol: &Tolerances,
) -> Result<Vec<C64>> {
    check_phase(config, phase, tol)?;
    Ok(hamiltonians_generic(&config.coeffs(), &phase.t, &phase.lambda, &phase.nu, conv))
}

/// Partial derivatives `(∂L_i/∂ν_k, ∂L_i/∂λ_k)` indexed `[i][k]`, without
/// any separation check.
pub(crate) fn partials(a: &[C64], t: &[C64], lam: &[C64], nu: &[C64]) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let n = t.len();
    let td: Vec<Dual> = t.iter().map(|&z| Dual::from(z)).collect();
    let lift = |v: &[C64], seed: Option<usize>| -> Vec<Dual> {
        v.iter()
            .enumerate()
            .map(|(k, &z)| if Some(k) == seed { Dual::variable(z) } else { Dual::from(z) })
            .collect()
    };
    let mut d_nu = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut d_lam = vec![vec![C64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        let by_nu = hamiltonians_generic(a, &td, &lift(lam, None), &lift(nu, Some(k)), UkConvention::AllPoles);
        let by_lam = hamiltonians_generic(a, &td, &lift(lam, Some(k)), &lift(nu, None), UkConvention::AllPoles);
        for i in 0..n {
            d_nu[i][k] = by_nu[i].eps;
            d_lam[i][k] = by_lam[i].eps;
        }
    }
    (d_nu, d_lam)
}

/// The Garnier vector field: entry `[i]` holds `(∂λ/∂t_i, ∂ν/∂t_i)` with
/// `∂λ_k/∂t_i = ∂L_i/∂ν_k` and `∂ν_k/∂t_i = −∂L_i/∂λ_k`.
pub fn hamiltonian_field(
    config: &GarnierConfig,
    phase: &PhasePoint,
    tol: &Tolerances,
) -> Result<Vec<(Vec<C64>, Vec<C64>)>> {
    check_phase(config, phase, tol)?;
    let (d_nu, d_lam) = partials(&config.coeffs(), &phase.t, &phase.lambda, &phase.nu);
    Ok(d_nu
        .into_iter()
        .zip(d_lam)
        .map(|(dl, dn)| (dl, dn.into_iter().map(|x| -x).collect()))
        .collect())
}

/// The potential `p(z, t)` of the scalar equation `w'' = p w`, stored by its
/// coefficients in the partial-fraction basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPotential {
    /// `a_1, …, a_{N+3}`.
    pub a: Vec<C64>,
    pub t: Vec<C64>,
    pub lambda: Vec<C64>,
    pub nu: Vec<C64>,
    /// Residues `L_i` at `t_i`.
    pub l: Vec<C64>,
}

impl RationalPotential {
    /// The potential with `L` given by the Hamiltonians, so every `λ_i` is
    /// an apparent singularity.
    pub fn new(config: &GarnierConfig, phase: &PhasePoint, tol: &Tolerances) -> Result<Self> {
        let l = hamiltonians(config, phase, tol)?;
        Ok(Self::with_residues(config, phase, l))
    }

    /// The potential with arbitrary residues at the `t_i`.
    pub fn with_residues(config: &GarnierConfig, phase: &PhasePoint, l: Vec<C64>) -> Self {
        Self {
            a: config.coeffs(),
            t: phase.t.clone(),
            lambda: phase.lambda.clone(),
            nu: phase.nu.clone(),
            l,
        }
    }

    pub fn n_params(&self) -> usize {
        self.t.len()
    }

    pub fn eval(&self, z: C64) -> C64 {
        let n = self.t.len();
        let z1 = z - 1.0;
        let zz1 = z * z1;
        let mut p = self.a[n] / (z * z) + self.a[n + 1] / (z1 * z1) + self.a[n + 2] / zz1;
        for i in 0..n {
            let (ti, li) = (self.t[i], self.lambda[i]);
            let dt = z - ti;
            let dl = z - li;
            p += self.a[i] / (dt * dt) + ti * (ti - 1.0) * self.l[i] / (zz1 * dt) + 0.75 / (dl * dl)
                - li * (li - 1.0) * self.nu[i] / (zz1 * dl);
        }
        p
    }

    /// The finite singular points `t_1..t_N, 0, 1, λ_1..λ_N`.
    pub fn poles(&self) -> Vec<C64> {
        let mut p = self.t.clone();
        p.push(C64::new(0.0, 0.0));
        p.push(C64::new(1.0, 0.0));
        p.extend_from_slice(&self.lambda);
        p
    }

    /// `p · φ² ψ²` as a polynomial of degree at most `4N + 2`.
    pub fn numerator(&self) -> Poly {
        let three_quarters = vec![C64::new(0.75, 0.0); self.t.len()];
        basis_numerator(&self.a, &self.t, &self.lambda, &self.nu, &self.l, &three_quarters)
    }
}

/// Numerator over `φ²ψ²` of the basis combination with coefficients `a`
/// (double poles at `t_i, 0, 1` and the accessory term), residues `l` at
/// `t_i`, residues `−ν` at `λ`, and `lam_double` on `1/(z − λ_k)²`.
pub(crate) fn basis_numerator(a: &[C64], t: &[C64], lambda: &[C64], nu: &[C64], l: &[C64], lam_double: &[C64]) -> Poly {
    let n = t.len();
    let mut pts = t.to_vec();
    pts.push(C64::new(0.0, 0.0));
    pts.push(C64::new(1.0, 0.0));
    pts.extend_from_slice(lambda);
    // numerator of c / Π_{j ∈ den} (z − x_j) over the common denominator
    let term = |c: C64, den: &[usize]| -> Poly {
        let mut roots = Vec::with_capacity(2 * pts.len());
        for (j, &x) in pts.iter().enumerate() {
            let mult = 2 - den.iter().filter(|&&d| d == j).count();
            roots.extend(std::iter::repeat(x).take(mult));
        }
        Poly::from_roots(&roots).scale(c)
    };
    let (zero, one) = (n, n + 1);
    let mut num = &term(a[zero], &[zero, zero]) + &term(a[one], &[one, one]);
    num = &num + &term(a[n + 2], &[zero, one]);
    for i in 0..n {
        let (ti, li) = (t[i], lambda[i]);
        let lam_idx = n + 2 + i;
        num = &num + &term(a[i], &[i, i]);
        num = &num + &term(ti * (ti - 1.0) * l[i], &[zero, one, i]);
        num = &num + &term(lam_double[i], &[lam_idx, lam_idx]);
        num = &num + &term(-li * (li - 1.0) * nu[i], &[zero, one, lam_idx]);
    }
    num
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn hand_value() {
        let cfg = GarnierConfig::from_real(&[1.0; 4]).unwrap();
        let ph = PhasePoint::new(vec![c(2.0)], vec![c(3.0)], vec![c(0.0)]);
        let l = hamiltonians(&cfg, &ph, &Tolerances::default()).unwrap();
        assert!((l[0] - c(0.5)).norm() < 1e-15);
        // with ν = 0 the two readings of U_k differ only by a_1 = 0 here
        let alt = hamiltonians_with(&cfg, &ph, UkConvention::SkipOwnPole, &Tolerances::default()).unwrap();
        assert!((alt[0] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn quadratic_in_nu() {
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4, 0.9]).unwrap();
        let base = PhasePoint::new(
            vec![C64::new(2.0, 1.0), C64::new(-1.0, 0.5)],
            vec![C64::new(0.5, -0.7), C64::new(3.0, 0.2)],
            vec![C64::new(0.4, 0.1), C64::new(-0.3, 0.8)],
        );
        let tol = Tolerances::default();
        let ev = |s: f64| {
            let mut p = base.clone();
            p.nu.iter_mut().for_each(|x| *x *= s);
            hamiltonians(&cfg, &p, &tol).unwrap()
        };
        let (l0, l1, l2, l3) = (ev(0.0), ev(1.0), ev(2.0), ev(3.0));
        for i in 0..2 {
            // third finite difference of a quadratic vanishes
            let d3 = l3[i] - 3.0 * l2[i] + 3.0 * l1[i] - l0[i];
            assert!(d3.norm() < 1e-10 * l3[i].norm().max(1.0));
        }
    }

    #[test]
    fn dual_partials_match_finite_differences() {
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4, 0.9]).unwrap();
        let ph = PhasePoint::new(
            vec![C64::new(2.0, 1.0), C64::new(-1.0, 0.5)],
            vec![C64::new(0.5, -0.7), C64::new(3.0, 0.2)],
            vec![C64::new(0.4, 0.1), C64::new(-0.3, 0.8)],
        );
        let tol = Tolerances::default();
        let field = hamiltonian_field(&cfg, &ph, &tol).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut plus = ph.clone();
            let mut minus = ph.clone();
            plus.lambda[k] += h;
            minus.lambda[k] -= h;
            let lp = hamiltonians(&cfg, &plus, &tol).unwrap();
            let lm = hamiltonians(&cfg, &minus, &tol).unwrap();
            for i in 0..2 {
                let fd = -(lp[i] - lm[i]) / (2.0 * h);
                assert!((field[i].1[k] - fd).norm() < 1e-6 * fd.norm().max(1.0));
            }
        }
    }

    #[test]
    fn numerator_matches_evaluation() {
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4, 0.9]).unwrap();
        let ph = PhasePoint::new(
            vec![C64::new(2.0, 1.0), C64::new(-1.0, 0.5)],
            vec![C64::new(0.5, -0.7), C64::new(3.0, 0.2)],
            vec![C64::new(0.4, 0.1), C64::new(-0.3, 0.8)],
        );
        let pot = RationalPotential::with_residues(&cfg, &ph, vec![c(0.3), C64::new(-1.0, 2.0)]);
        let num = pot.numerator();
        assert_eq!(num.formal_degree(), 4 * 2 + 2);
        let den = Poly::from_roots(&[pot.poles(), pot.poles()].concat());
        for z in [C64::new(0.3, 0.4), C64::new(-2.0, 1.5), C64::new(5.0, -3.0)] {
            assert!((num.eval(z) / den.eval(z) - pot.eval(z)).norm() < 1e-10 * pot.eval(z).norm());
        }
    }
}
