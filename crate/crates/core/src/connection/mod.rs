//! Local theory of logarithmic connection germs `dY − A(w)(dw/w)Y` at
//! `w = 0`: reduced normal forms, the Euler model, mildness, and residues
//! of commuting monodromies.

mod mild;
mod pdl;
mod series;

pub use mild::{is_mild, MildVerdict};
pub use pdl::{pdl_reduce, Reduction};
pub use series::{GaugeTransform, MatLaurent};

use crate::error::{Error, Result};
use crate::linalg::{commutator, matrix_log_normalized, max_abs, CMatrix};
use crate::tol::Tolerances;
use crate::C64;
use serde::{Deserialize, Serialize};

/// The germ `dY − A(w)(dw/w)Y` with `A(w) = Σ_{k=0}^{d} A_k w^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermConnection {
    pub m: usize,
    #[serde(with = "crate::json::matrix_vec")]
    pub coeffs: Vec<CMatrix>,
}

impl GermConnection {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let g = Self {
            m: coeffs.first().map_or(0, |a| a.nrows()),
            coeffs,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn constant(a0: CMatrix) -> Self {
        Self { m: a0.nrows(), coeffs: vec![a0] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::Invalid("a germ needs at least the constant coefficient".into()));
        }
        if let Some(k) = self.coeffs.iter().position(|a| a.shape() != (self.m, self.m)) {
            return Err(Error::Dimension(format!(
                "coefficient A_{k} has shape {:?}, expected {}x{}",
                self.coeffs[k].shape(),
                self.m,
                self.m
            )));
        }
        Ok(())
    }

    /// Truncation degree `d`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn series(&self) -> MatLaurent {
        MatLaurent {
            m: self.m,
            k0: 0,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn eval(&self, w: C64) -> CMatrix {
        self.series().eval(w)
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().map(max_abs).fold(1.0, f64::max)
    }
}

/// Largest coefficient norm of `G·B − A·G + w·dG/dw`, which vanishes
/// exactly when `Y = G Z` carries `dY − A(dw/w)Y` to `dZ − B(dw/w)Z`.
/// With `max_deg` set, only exponents up to it are compared.
pub fn gauge_residual(a: &GermConnection, g: &GaugeTransform, b: &GermConnection, max_deg: Option<i64>) -> f64 {
    let lhs = g.mul(&b.series(), max_deg);
    let rhs = a.series().mul(g, max_deg);
    let mut res = lhs.sub(&rhs).add(&g.euler_derivative());
    if let Some(d) = max_deg {
        res = res.truncated(d);
    }
    res.max_norm()
}

/// Rounded value of `d` when it is an integer within `tol` (relative to
/// `max(1, |d|)`).
pub(crate) fn integer_offset(d: C64, tol: f64) -> Option<i64> {
    let s = d.norm().max(1.0);
    let r = d.re.round();
    ((d.re - r).abs() <= tol * s && d.im.abs() <= tol * s).then_some(r as i64)
}

/// Contiguous index range of one block of a reduced germ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

/// First failed condition of the reduced normal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1: triangular blocks with Jordan constant term; 2: no integer
    /// differences across blocks; 3: integer differences within blocks;
    /// 4: decreasing real parts; 5: monomial entries of the right degree.
    pub condition: u8,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedCheck {
    pub reduced: bool,
    pub violation: Option<Violation>,
}

fn violation(condition: u8, message: String) -> std::result::Result<Vec<Block>, Violation> {
    Err(Violation { condition, message })
}

/// Splits the diagonal into maximal runs of consecutive entries with
/// integer differences.
fn diagonal_runs(lambda: &[C64], tol: f64) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::new();
    for u in 0..lambda.len() {
        match blocks.last_mut() {
            Some(b) if integer_offset(lambda[u - 1] - lambda[u], tol).is_some() => b.len += 1,
            _ => blocks.push(Block { start: u, len: 1 }),
        }
    }
    blocks
}

fn analyse(germ: &GermConnection, tol: &Tolerances) -> std::result::Result<Vec<Block>, Violation> {
    let m = germ.m;
    let zero = tol.cluster * germ.scale();
    let is_zero = |z: C64| z.norm() <= zero;
    let a0 = &germ.coeffs[0];
    let lambda: Vec<C64> = (0..m).map(|u| a0[(u, u)]).collect();
    let close = |x: C64, y: C64| (x - y).norm() <= tol.cluster * x.norm().max(y.norm()).max(1.0);

    for (k, a) in germ.coeffs.iter().enumerate() {
        for u in 0..m {
            for v in 0..u {
                if !is_zero(a[(u, v)]) {
                    return violation(1, format!("A_{k} has a nonzero entry ({}, {}) below the diagonal", u + 1, v + 1));
                }
            }
        }
    }
    for u in 0..m {
        for v in (u + 1)..m {
            let z = a0[(u, v)];
            if is_zero(z) {
                continue;
            }
            let jordan_one = v == u + 1 && close(z, C64::new(1.0, 0.0)) && close(lambda[u], lambda[v]);
            if !jordan_one {
                return violation(1, format!("A_0 is not in Jordan form at entry ({}, {})", u + 1, v + 1));
            }
        }
    }

    let blocks = diagonal_runs(&lambda, tol.cluster);
    let block_of: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(i, b)| std::iter::repeat(i).take(b.len))
        .collect();
    for u in 0..m {
        for v in (u + 1)..m {
            let integral = integer_offset(lambda[u] - lambda[v], tol.cluster).is_some();
            if block_of[u] != block_of[v] && integral {
                return violation(2, format!(
                    "diagonal entries {} and {} differ by an integer but lie in different blocks",
                    u + 1,
                    v + 1
                ));
            }
            if block_of[u] == block_of[v] && !integral {
                return violation(3, format!("diagonal entries {} and {} of one block differ by a non-integer", u + 1, v + 1));
            }
        }
    }
    for b in &blocks {
        for u in b.start..(b.start + b.len - 1) {
            if lambda[u + 1].re > lambda[u].re + tol.cluster * lambda[u].norm().max(1.0) {
                return violation(4, format!("real parts increase from position {} to {}", u + 1, u + 2));
            }
        }
    }
    for (k, a) in germ.coeffs.iter().enumerate() {
        for u in 0..m {
            for v in u..m {
                if is_zero(a[(u, v)]) {
                    continue;
                }
                if block_of[u] != block_of[v] {
                    return violation(5, format!(
                        "entry ({}, {}) of A_{k} couples two blocks and must vanish",
                        u + 1,
                        v + 1
                    ));
                }
                let required = integer_offset(lambda[u] - lambda[v], tol.cluster).unwrap_or(i64::MIN);
                if required != k as i64 {
                    return violation(5, format!(
                        "entry ({}, {}) must be a monomial of degree {required}, found degree {k}",
                        u + 1,
                        v + 1
                    ));
                }
            }
        }
    }
    Ok(blocks)
}

/// Tests the reduced normal form conditions, reporting the first failure.
pub fn check_reduced(germ: &GermConnection, tol: &Tolerances) -> Result<ReducedCheck> {
    germ.validate()?;
    Ok(match analyse(germ, tol) {
        Ok(_) => ReducedCheck { reduced: true, violation: None },
        Err(v) => ReducedCheck { reduced: false, violation: Some(v) },
    })
}

/// A germ known to be in reduced form, with its block ranges and diagonal
/// exponents `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedConnection {
    pub germ: GermConnection,
    pub blocks: Vec<Block>,
    #[serde(with = "crate::json::complex_vec")]
    pub lambda: Vec<C64>,
}

impl ReducedConnection {
    pub fn new(germ: GermConnection, tol: &Tolerances) -> Result<Self> {
        germ.validate()?;
        let blocks = analyse(&germ, tol)
            .map_err(|v| Error::NotReduced(format!("condition ({}): {}", v.condition, v.message)))?;
        let lambda = (0..germ.m).map(|u| germ.coeffs[0][(u, u)]).collect();
        Ok(Self { germ, blocks, lambda })
    }

    /// Integer shift `L` with `L_uu = ⌊Re Λ_uu⌋`, computed blockwise from the
    /// first entry so that integer offsets inside a block are exact.
    pub fn floor_shift(&self, tol: &Tolerances) -> Vec<i64> {
        let mut out = vec![0; self.lambda.len()];
        for b in &self.blocks {
            let base = self.lambda[b.start];
            let floor = base.re.floor() as i64;
            for u in b.start..(b.start + b.len) {
                out[u] = floor + integer_offset(self.lambda[u] - base, tol.cluster).unwrap_or(0);
            }
        }
        out
    }
}

/// The Euler model `C = A(1) − L` of a reduced germ.
pub fn eul(reduced: &ReducedConnection, tol: &Tolerances) -> CMatrix {
    let mut c = reduced.germ.eval(C64::new(1.0, 0.0));
    for (u, l) in reduced.floor_shift(tol).into_iter().enumerate() {
        c[(u, u)] -= C64::new(l as f64, 0.0);
    }
    c
}

/// Normalized logarithms `R_j` (eigenvalue real parts in `[0, 1)`) of
/// pairwise commuting monodromies, so that `exp(2πi R_j) = M_j`.
pub fn local_rh_residues(monodromies: &[CMatrix], tol: &Tolerances) -> Result<Vec<CMatrix>> {
    let Some(m) = monodromies.first().map(|a| a.nrows()) else {
        return Ok(Vec::new());
    };
    if monodromies.iter().any(|a| a.shape() != (m, m)) {
        return Err(Error::Dimension("monodromies must be square of equal size".into()));
    }
    let pair_defect = |mats: &[CMatrix]| {
        let mut worst = 0.0_f64;
        for i in 0..mats.len() {
            for j in (i + 1)..mats.len() {
                let s = (mats[i].norm() * mats[j].norm()).max(1.0);
                worst = worst.max(commutator(&mats[i], &mats[j]).norm() / s);
            }
        }
        worst
    };
    let defect = pair_defect(monodromies);
    if defect > tol.eq {
        return Err(Error::NotCommuting { defect });
    }
    let logs = monodromies
        .iter()
        .map(|a| matrix_log_normalized(a, tol))
        .collect::<Result<Vec<_>>>()?;
    let log_defect = pair_defect(&logs);
    if log_defect > 10.0 * tol.null_space.max(tol.eq) {
        return Err(Error::Conditioning(format!(
            "logarithms of commuting monodromies fail to commute (defect {log_defect:e})"
        )));
    }
    Ok(logs)
}
