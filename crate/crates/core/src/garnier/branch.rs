//! Analytic continuation of Garnier solutions around loops in `t`-space and
//! counting of the resulting branches.

use super::flow::{continue_along, FlowPath};
use super::hamiltonian::hamiltonians_generic;
use super::monodromy::LOOP_SEGMENTS;
use super::{GarnierConfig, PhasePoint, UkConvention};
use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A closed path in which only `t_{coordinate}` moves, encircling one of the
/// other singular values once counterclockwise. `around` is `"0"`, `"1"`
/// or `"t_j"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TLoop {
    pub coordinate: usize,
    pub around: String,
    pub path: FlowPath,
}

/// The elementary loops based at `t0`: each `t_i` goes once around `0`, `1`
/// and every other `t_j`. Loops around infinity are products of these and
/// are not listed.
///
/// Spokes are straight; a base point from which some spoke would graze
/// another singular value is rejected rather than rerouted.
pub fn elementary_loops(t0: &[C64], tol: &Tolerances) -> Result<Vec<TLoop>> {
    let n = t0.len();
    let mut out = Vec::new();
    for i in 0..n {
        let mut targets: Vec<(String, C64)> = vec![("0".into(), C64::new(0.0, 0.0)), ("1".into(), C64::new(1.0, 0.0))];
        targets.extend((0..n).filter(|&j| j != i).map(|j| (format!("t_{}", j + 1), t0[j])));
        for (k, (name, x)) in targets.iter().enumerate() {
            let mut gap = (t0[i] - x).norm();
            for (m, (_, y)) in targets.iter().enumerate() {
                if m != k {
                    gap = gap.min((x - y).norm());
                }
            }
            if gap < tol.separation {
                return Err(Error::Degeneracy {
                    what: format!("t_{} and {name} nearly coincide", i + 1),
                    location: format!("t = ({})", super::format_points(t0)),
                });
            }
            let radius = 0.5 * gap;
            let dir = (t0[i] - x) / (t0[i] - x).norm();
            let start = x + dir * radius;
            // the spoke must not pass another singular value
            for (m, (other, y)) in targets.iter().enumerate() {
                if m == k {
                    continue;
                }
                let d = start - t0[i];
                let s = (((y - t0[i]) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                if (y - (t0[i] + d * s)).norm() < 0.5 * radius {
                    return Err(Error::Degeneracy {
                        what: format!("loop of t_{} around {name} passes {other}", i + 1),
                        location: format!("t = ({})", super::format_points(t0)),
                    });
                }
            }
            let mut pts = vec![t0[i]];
            for step in 0..=LOOP_SEGMENTS {
                let ang = 2.0 * PI * step as f64 / LOOP_SEGMENTS as f64;
                pts.push(x + dir * radius * C64::from_polar(1.0, ang));
            }
            pts.push(t0[i]);
            let waypoints = pts
                .into_iter()
                .map(|z| {
                    let mut w = t0.to_vec();
                    w[i] = z;
                    w
                })
                .collect();
            out.push(TLoop {
                coordinate: i + 1,
                around: name.clone(),
                path: FlowPath::new(waypoints),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchVerdict {
    Branches { count: usize, branches: Vec<PhasePoint> },
    ExceededCap { visited: usize },
}

impl BranchVerdict {
    pub fn count(&self) -> Option<usize> {
        match self {
            BranchVerdict::Branches { count, .. } => Some(*count),
            BranchVerdict::ExceededCap { .. } => None,
        }
    }
}

/// Equality of `(λ, ν)` within relative tolerance, up to a relabelling of
/// the pairs `(λ_k, ν_k)`.
fn same_branch(a: &PhasePoint, b: &PhasePoint, rel: f64) -> bool {
    let n = a.lambda.len();
    let scale = a
        .lambda
        .iter()
        .chain(&a.nu)
        .chain(&b.lambda)
        .chain(&b.nu)
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    let close = |k: usize, j: usize| {
        (a.lambda[k] - b.lambda[j]).norm() <= rel * scale && (a.nu[k] - b.nu[j]).norm() <= rel * scale
    };
    // greedy matching is exact here: distinct labels sit far apart relative
    // to the identification tolerance
    let mut used = vec![false; n];
    (0..n).all(|k| match (0..n).find(|&j| !used[j] && close(k, j)) {
        Some(j) => {
            used[j] = true;
            true
        }
        None => false,
    })
}

/// Continues `phase0` around all words of length at most `depth` in the
/// elementary loops, breadth first. Movable singularities met on the way
/// are passed by local detours. Returns the distinct branches when no
/// new one appears at some level, and `ExceededCap` when more than `cap`
/// branches are found or the depth runs out first.
pub fn branch_probe(
    config: &GarnierConfig,
    phase0: &PhasePoint,
    depth: usize,
    cap: usize,
    tol: &Tolerances,
) -> Result<BranchVerdict> {
    phase0.validate(config, tol)?;
    let loops = elementary_loops(&phase0.t, tol)?;
    let mut branches = vec![phase0.clone()];
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let jobs: Vec<(usize, usize)> = frontier
            .iter()
            .flat_map(|&b| (0..loops.len()).map(move |l| (b, l)))
            .collect();
        let ends: Vec<PhasePoint> = jobs
            .par_iter()
            .map(|&(b, l)| continue_along(config, &branches[b], &loops[l].path, tol))
            .collect::<Result<_>>()?;
        let mut next = Vec::new();
        for end in ends {
            if !branches.iter().any(|b| same_branch(b, &end, tol.branch_id)) {
                branches.push(end);
                next.push(branches.len() - 1);
                if branches.len() > cap {
                    return Ok(BranchVerdict::ExceededCap { visited: branches.len() });
                }
            }
        }
        if next.is_empty() {
            return Ok(BranchVerdict::Branches {
                count: branches.len(),
                branches,
            });
        }
        frontier = next;
    }
    Ok(BranchVerdict::ExceededCap { visited: branches.len() })
}

/// For `N = 1`, the momentum making `dλ/dt` equal to `velocity` (the
/// Hamiltonian is quadratic in `ν`).
fn momentum_for_velocity(config: &GarnierConfig, t: C64, lambda: C64, velocity: C64) -> Result<C64> {
    let a = config.coeffs();
    let ev = |nu: f64| hamiltonians_generic(&a, &[t], &[lambda], &[C64::new(nu, 0.0)], UkConvention::AllPoles)[0];
    let (l0, l1, lm) = (ev(0.0), ev(1.0), ev(-1.0));
    let quad = (l1 + lm) / 2.0 - l0;
    let lin = (l1 - lm) / 2.0;
    if quad.norm() < 1e-14 {
        return Err(Error::Conditioning("Hamiltonian is degenerate in ν".into()));
    }
    Ok((velocity - lin) / (2.0 * quad))
}

/// Painlevé VI data with all exponents `1/2` and the two-valued solution
/// `λ = √t`, at the given `t`.
pub fn sqrt_seed(t: C64) -> Result<(GarnierConfig, PhasePoint)> {
    let config = GarnierConfig::from_real(&[0.5; 4])?;
    let lambda = t.sqrt();
    let nu = momentum_for_velocity(&config, t, lambda, 0.5 / lambda)?;
    Ok((config, PhasePoint::new(vec![t], vec![lambda], vec![nu])))
}

/// Painlevé VI data with exponents `(θ_1, θ_0, 1, 1 + θ_1 − θ_0)`, which
/// admits the single-valued solution `λ = κ t`, `κ = θ_0/(θ_0 − θ_1)`.
pub fn linear_seed(theta_1: f64, theta_0: f64, t: C64) -> Result<(GarnierConfig, PhasePoint)> {
    if (theta_0 - theta_1).abs() < 1e-12 {
        return Err(Error::Invalid("θ_0 and θ_1 must differ".into()));
    }
    let config = GarnierConfig::from_real(&[theta_1, theta_0, 1.0, 1.0 + theta_1 - theta_0])?;
    let kappa = theta_0 / (theta_0 - theta_1);
    let lambda = t * kappa;
    let nu = momentum_for_velocity(&config, t, lambda, C64::new(kappa, 0.0))?;
    Ok((config, PhasePoint::new(vec![t], vec![lambda], vec![nu])))
}
