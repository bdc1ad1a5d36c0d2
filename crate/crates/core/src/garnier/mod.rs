//! Garnier systems: the isomonodromic deformation of a second order Fuchsian
//! equation with `N + 3` essential singularities at `t_1, …, t_N, 0, 1, ∞`
//! and `N` apparent singularities at `λ_1, …, λ_N`.
//!
//! Pole indexing: wherever formulas range over `m = 1..=N+2`, the last two
//! indices stand for the fixed poles `0` and `1`.

mod branch;
mod dual;
mod flow;
mod hamiltonian;
mod monodromy;
mod normal;
mod poly;

pub use branch::{branch_probe, elementary_loops, linear_seed, sqrt_seed, BranchVerdict, TLoop};
pub use dual::{Dual, Scalar};
pub use flow::{continue_along, flow, flow_with_trajectory, FlowPath, TrajectorySample};
pub use hamiltonian::{hamiltonian_field, hamiltonians, hamiltonians_with, RationalPotential, UkConvention};
pub use monodromy::{
    companion_monodromy, fuchsian_monodromy, lasso_loops, transport, CompanionMonodromy, PoleLabel, LOOP_SEGMENTS,
};
pub use normal::{companion_extract, extract_coefficients, normalized_form, BasisCoefficients, RationalTriple};
pub use poly::Poly;

use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Exponent data of a Garnier system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarnierConfig {
    #[serde(rename = "N")]
    pub n_params: usize,
    #[serde(with = "crate::json::complex_vec")]
    pub theta: Vec<C64>,
}

impl GarnierConfig {
    pub fn new(theta: Vec<C64>) -> Result<Self> {
        let c = Self {
            n_params: theta.len().saturating_sub(3),
            theta,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_real(theta: &[f64]) -> Result<Self> {
        Self::new(theta.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_params < 1 {
            return Err(Error::Invalid("a Garnier system needs N >= 1".into()));
        }
        if self.theta.len() != self.n_params + 3 {
            return Err(Error::Dimension(format!(
                "expected {} exponents for N = {}, got {}",
                self.n_params + 3,
                self.n_params,
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|z| !z.is_finite()) {
            return Err(Error::Invalid("non-finite exponent".into()));
        }
        Ok(())
    }

    /// The coefficients `a_1, …, a_{N+3}`.
    pub fn coeffs(&self) -> Vec<C64> {
        theta_to_coeffs(&self.theta).expect("validated config")
    }

    pub fn theta_n(&self) -> C64 {
        self.theta[self.theta.len() - 1]
    }
}

/// `a_i = (θ_i² − 1)/4` for the finite poles and the accessory constant
/// `a_{N+3} = (1−N)/2 − Σ θ_i²/4 + (θ_n/2)(θ_n/2 − 1)`.
pub fn theta_to_coeffs(theta: &[C64]) -> Result<Vec<C64>> {
    let n = theta.len();
    if n < 4 {
        return Err(Error::Invalid(format!("need at least 4 exponents, got {n}")));
    }
    let big_n = (n - 3) as f64;
    let finite = &theta[..n - 1];
    let mut a: Vec<C64> = finite.iter().map(|t| (t * t - 1.0) / 4.0).collect();
    let sum_sq: C64 = finite.iter().map(|t| t * t).sum();
    let half = theta[n - 1] / 2.0;
    a.push((1.0 - big_n) / 2.0 - sum_sq / 4.0 + half * (half - 1.0));
    Ok(a)
}

/// Recovers the exponent at infinity from the coefficients; the two
/// roots are exchanged by `θ ↦ 2 − θ`.
pub fn coeffs_to_theta_n(a: &[C64]) -> (C64, C64) {
    let n = a.len();
    let big_n = n as f64 - 3.0;
    let finite: C64 = a[..n - 1].iter().sum();
    // (θ/2)² − θ/2 = c
    let c = a[n - 1] - (1.0 - big_n) / 2.0 + finite + (n as f64 - 1.0) / 4.0;
    let root = (1.0 + 4.0 * c).sqrt();
    (1.0 + root, 1.0 - root)
}

pub(crate) fn format_points(z: &[C64]) -> String {
    z.iter().map(|z| format!("{z}")).collect::<Vec<_>>().join(", ")
}

/// A point `(t, λ, ν)` of the extended phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    #[serde(with = "crate::json::complex_vec")]
    pub t: Vec<C64>,
    #[serde(rename = "lambda", with = "crate::json::complex_vec")]
    pub lambda: Vec<C64>,
    #[serde(with = "crate::json::complex_vec")]
    pub nu: Vec<C64>,
}

impl PhasePoint {
    pub fn new(t: Vec<C64>, lambda: Vec<C64>, nu: Vec<C64>) -> Self {
        Self { t, lambda, nu }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// The `N + 2` finite essential poles `t_1, …, t_N, 0, 1`.
    pub fn essential_poles(&self) -> Vec<C64> {
        let mut p = self.t.clone();
        p.push(C64::new(0.0, 0.0));
        p.push(C64::new(1.0, 0.0));
        p
    }

    /// Checks lengths, finiteness and pairwise separation of the `2N + 2`
    /// points `{0, 1, t_i, λ_i}`.
    pub fn validate(&self, config: &GarnierConfig, tol: &Tolerances) -> Result<()> {
        let n = config.n_params;
        if self.t.len() != n || self.lambda.len() != n || self.nu.len() != n {
            return Err(Error::Dimension(format!(
                "phase point needs {n} entries in t, lambda and nu"
            )));
        }
        if self.t.iter().chain(&self.lambda).chain(&self.nu).any(|z| !z.is_finite()) {
            return Err(Error::Invalid("non-finite phase coordinate".into()));
        }
        match closest_pair(&self.t, &self.lambda, tol.separation) {
            Some(what) => Err(Error::Degeneracy {
                what,
                location: format!("t = ({})", format_points(&self.t)),
            }),
            None => Ok(()),
        }
    }
}

/// Label of the `idx`-th point in the list `t_1..t_N, 0, 1, λ_1..λ_N`.
pub(crate) fn point_label(idx: usize, n: usize) -> String {
    match idx {
        i if i < n => format!("t_{}", i + 1),
        i if i == n => "0".into(),
        i if i == n + 1 => "1".into(),
        i => format!("λ_{}", i - n - 1),
    }
}

/// Describes the first pair of the points `{t_i, 0, 1, λ_i}` closer than
/// `sep`, if any.
pub(crate) fn closest_pair(t: &[C64], lambda: &[C64], sep: f64) -> Option<String> {
    let n = t.len();
    let mut pts: Vec<C64> = t.to_vec();
    pts.push(C64::new(0.0, 0.0));
    pts.push(C64::new(1.0, 0.0));
    pts.extend_from_slice(lambda);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if d < sep {
                return Some(format!(
                    "{} and {} within {d:.3e}",
                    point_label(i, n),
                    point_label(j, n)
                ));
            }
        }
    }
    None
}
