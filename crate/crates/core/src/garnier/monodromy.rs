//! Monodromy of linear systems `dY/dz = Q(z) Y` by adaptive transport along
//! polyline loops.
//!
//! A loop traversed first along `α` then `β` has monodromy `M_β M_α`: the
//! transported fundamental matrix along `β` multiplies the one along `α`
//! from the left.

use super::hamiltonian::RationalPotential;
use crate::braid::RepTuple;
use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix};
use crate::ode::{Dopri5, OdeSystem};
use crate::tol::Tolerances;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Segments used to discretize each small circle around a pole.
pub const LOOP_SEGMENTS: usize = 64;
const INFINITY_SEGMENTS: usize = 128;

struct Segment<'a, F> {
    q: &'a F,
    m: usize,
    z0: C64,
    dz: C64,
}

impl<F: Fn(C64) -> CMatrix> OdeSystem for Segment<'_, F> {
    fn rhs(&mut self, s: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let q = (self.q)(self.z0 + self.dz * s);
        let ym = CMatrix::from_column_slice(self.m, self.m, y);
        let out = q * ym * self.dz;
        dy.copy_from_slice(out.as_slice());
        Ok(())
    }
}

/// Continues the fundamental matrix `Y(path[0]) = I` along the polyline.
pub fn transport<F: Fn(C64) -> CMatrix>(q: &F, m: usize, path: &[C64], tol: &Tolerances) -> Result<CMatrix> {
    let solver = Dopri5::new(tol);
    let mut y = identity(m).as_slice().to_vec();
    for w in path.windows(2) {
        let mut seg = Segment {
            q,
            m,
            z0: w[0],
            dz: w[1] - w[0],
        };
        solver.integrate(&mut seg, &mut y, 0.0, 1.0)?;
    }
    Ok(CMatrix::from_column_slice(m, m, &y))
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

fn check_clearance(poles: &[C64], path: &[C64], min_dist: f64) -> Result<()> {
    for w in path.windows(2) {
        for (j, &p) in poles.iter().enumerate() {
            let d = segment_distance(p, w[0], w[1]);
            if d < min_dist {
                return Err(Error::Degeneracy {
                    what: format!("loop passes within {d:.3e} of pole #{} at {p}", j + 1),
                    location: format!("segment {} -> {}", w[0], w[1]),
                });
            }
        }
    }
    Ok(())
}

/// Monodromy matrices along the given closed loops, computed in parallel and
/// returned in input order. Every loop must keep `tol.separation` away from
/// the listed poles. Integration runs at `tol.monodromy_rtol`.
pub fn fuchsian_monodromy<F>(q: &F, m: usize, poles: &[C64], loops: &[Vec<C64>], tol: &Tolerances) -> Result<Vec<CMatrix>>
where
    F: Fn(C64) -> CMatrix + Sync,
{
    for lp in loops {
        if lp.len() < 2 || (lp[0] - lp[lp.len() - 1]).norm() > tol.separation {
            return Err(Error::Invalid("loops must be closed polylines".into()));
        }
        check_clearance(poles, lp, tol.separation)?;
    }
    let loop_tol = tol.with_ode_rtol(tol.monodromy_rtol);
    loops.par_iter().map(|lp| transport(q, m, lp, &loop_tol)).collect()
}

/// Counterclockwise lassos from `base` around each pole: straight spoke to a
/// circle of the given radius, once around it, and back.
///
/// Fails when a spoke passes closer than half the radius to another pole.
pub fn lasso_loops(poles: &[C64], base: C64, radius: f64) -> Result<Vec<Vec<C64>>> {
    poles
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let dir = (base - p) / (base - p).norm();
            let start = p + dir * radius;
            let others: Vec<C64> = poles
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &x)| x)
                .collect();
            check_clearance(&others, &[base, start], 0.5 * radius)?;
            let mut path = vec![base];
            for k in 0..=LOOP_SEGMENTS {
                let ang = 2.0 * PI * k as f64 / LOOP_SEGMENTS as f64;
                path.push(p + dir * radius * C64::from_polar(1.0, ang));
            }
            path.push(base);
            Ok(path)
        })
        .collect()
}

/// Which singular point a loop encircles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleLabel {
    T(usize),
    Zero,
    One,
    Lambda(usize),
    Infinity,
}

/// Monodromy of the companion system `Y' = [[0, 1], [p, 0]] Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionMonodromy {
    #[serde(with = "crate::json::complex")]
    pub basepoint: C64,
    /// Labels of `tuple.matrices`, in tuple order.
    pub labels: Vec<PoleLabel>,
    /// Loops around the essential singularities, ordered so that the
    /// product equals `±I`.
    pub tuple: RepTuple,
    /// Loops around `λ_1, …, λ_N`.
    #[serde(with = "crate::json::matrix_vec")]
    pub lambda_loops: Vec<CMatrix>,
}

impl CompanionMonodromy {
    pub fn get(&self, label: PoleLabel) -> Option<&CMatrix> {
        if let PoleLabel::Lambda(k) = label {
            return self.lambda_loops.get(k.checked_sub(1)?);
        }
        let i = self.labels.iter().position(|&l| l == label)?;
        Some(&self.tuple.matrices[i])
    }
}

fn labels_for(n: usize) -> Vec<PoleLabel> {
    let mut l: Vec<PoleLabel> = (1..=n).map(PoleLabel::T).collect();
    l.push(PoleLabel::Zero);
    l.push(PoleLabel::One);
    l.extend((1..=n).map(PoleLabel::Lambda));
    l
}

/// Chooses a basepoint on a circle around the pole cloud from which all
/// lassos are admissible, trying successive rotations.
fn place_loops(poles: &[C64], radius: f64) -> Result<(C64, Vec<Vec<C64>>, C64, f64)> {
    let center = poles.iter().sum::<C64>() / poles.len() as f64;
    let spread = poles.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    let big = spread + 1.0_f64.max(0.5 * spread);
    let mut last = None;
    for attempt in 0..24 {
        let ang = -PI / 2.0 + 0.37 * attempt as f64;
        let base = center + C64::from_polar(big, ang);
        match lasso_loops(poles, base, radius) {
            Ok(loops) => return Ok((base, loops, center, big)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Degeneracy {
        what: "no admissible basepoint".into(),
        location: format!("{center}"),
    }))
}

/// Monodromy of the companion system of the potential, around every finite
/// singularity and around infinity.
pub fn companion_monodromy(pot: &RationalPotential, tol: &Tolerances) -> Result<CompanionMonodromy> {
    let n = pot.n_params();
    let poles = pot.poles();
    let mut min_sep = f64::INFINITY;
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            min_sep = min_sep.min((poles[i] - poles[j]).norm());
        }
    }
    if min_sep < tol.separation {
        return Err(Error::Degeneracy {
            what: format!("singular points within {min_sep:.3e}"),
            location: format!("t = ({})", super::format_points(&pot.t)),
        });
    }
    let radius = 0.5 * min_sep;
    let (base, mut loops, center, big) = place_loops(&poles, radius)?;

    // clockwise circle through the basepoint, i.e. positive around infinity
    let start_ang = (base - center).arg();
    let inf_loop: Vec<C64> = (0..=INFINITY_SEGMENTS)
        .map(|k| center + C64::from_polar(big, start_ang - 2.0 * PI * k as f64 / INFINITY_SEGMENTS as f64))
        .collect();
    loops.push(inf_loop);
    let mut all_poles = poles.clone();
    all_poles.push(center);

    let q = |z: C64| {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = pot.eval(z);
        m
    };
    let mats = fuchsian_monodromy(&q, 2, &poles, &loops, tol)?;

    // counterclockwise order as seen from the basepoint, reversed, then ∞
    let labels = labels_for(n);
    let facing = (center - base) / (center - base).norm();
    let mut order: Vec<usize> = (0..n + 2).collect();
    let angle = |j: usize| ((poles[j] - base) / facing).arg();
    order.sort_by(|&i, &j| angle(j).total_cmp(&angle(i)));
    let mut tuple_mats: Vec<CMatrix> = order.iter().map(|&j| mats[j].clone()).collect();
    let mut tuple_labels: Vec<PoleLabel> = order.iter().map(|&j| labels[j]).collect();
    tuple_mats.push(mats[2 * n + 2].clone());
    tuple_labels.push(PoleLabel::Infinity);

    Ok(CompanionMonodromy {
        basepoint: base,
        labels: tuple_labels,
        tuple: RepTuple {
            n: n + 3,
            m: 2,
            product_constraint: false,
            matrices: tuple_mats,
        },
        lambda_loops: mats[n + 2..2 * n + 2].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{GarnierConfig, PhasePoint};
    use super::*;
    use crate::linalg::{determinant, expm, from_real_rows, max_abs};

    #[test]
    fn euler_system() {
        let c = from_real_rows(&[&[0.3, 1.0], &[0.2, -0.45]]);
        let q = |z: C64| &c / z;
        let base = C64::new(0.0, -1.0);
        let loops = lasso_loops(&[C64::new(0.0, 0.0)], base, 0.5).unwrap();
        let tol = Tolerances::default();
        let m = fuchsian_monodromy(&q, 2, &[C64::new(0.0, 0.0)], &loops, &tol).unwrap();
        let expected = expm(&(&c * C64::new(0.0, 2.0 * PI)));
        assert!(max_abs(&(&m[0] - &expected)) < 1e-8);
    }

    #[test]
    fn sphere_relation() {
        let poles = [C64::new(0.0, 0.0), C64::new(1.0, 0.3), C64::new(-0.6, 1.1)];
        let res = [
            from_real_rows(&[&[0.2, 0.5], &[-0.3, 0.1]]),
            from_real_rows(&[&[-0.4, 0.2], &[0.6, 0.3]]),
            from_real_rows(&[&[0.1, -0.7], &[0.25, -0.35]]),
        ];
        let q = |z: C64| {
            let mut acc = CMatrix::zeros(2, 2);
            for (p, r) in poles.iter().zip(&res) {
                acc += r / (z - p);
            }
            acc
        };
        let (base, mut loops, center, big) = place_loops(&poles, 0.3).unwrap();
        let start = (base - center).arg();
        loops.push(
            (0..=INFINITY_SEGMENTS)
                .map(|k| center + C64::from_polar(big, start - 2.0 * PI * k as f64 / INFINITY_SEGMENTS as f64))
                .collect(),
        );
        let tol = Tolerances::default();
        let mats = fuchsian_monodromy(&q, 2, &poles, &loops, &tol).unwrap();
        let facing = (center - base) / (center - base).norm();
        let mut order = vec![0, 1, 2];
        order.sort_by(|&i, &j| ((poles[j] - base) / facing).arg().total_cmp(&((poles[i] - base) / facing).arg()));
        let mut prod = identity(2);
        for &j in &order {
            prod *= &mats[j];
        }
        prod *= &mats[3];
        assert!(max_abs(&(prod - identity(2))) < 1e-8);
    }

    #[test]
    fn apparent_loops_are_minus_identity() {
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4, 0.9]).unwrap();
        let ph = PhasePoint::new(
            vec![C64::new(2.0, 1.0), C64::new(-1.0, 0.5)],
            vec![C64::new(0.5, -0.7), C64::new(3.0, 0.2)],
            vec![C64::new(0.4, 0.1), C64::new(-0.3, 0.8)],
        );
        let tol = Tolerances::default();
        let pot = RationalPotential::new(&cfg, &ph, &tol).unwrap();
        let mono = companion_monodromy(&pot, &tol).unwrap();
        for m in &mono.lambda_loops {
            assert!(max_abs(&(m + identity(2))) < 1e-6, "{m}");
        }
        for m in &mono.tuple.matrices {
            assert!((determinant(m) - 1.0).norm() < 1e-8);
        }
        let prod = mono.tuple.product();
        // the product of large monodromies cancels, so measure it against their norms
        let scale: f64 = mono.tuple.matrices.iter().map(max_abs).product();
        let defect = max_abs(&(&prod - identity(2))).min(max_abs(&(&prod + identity(2))));
        assert!(defect < 1e-12 * scale.max(1.0), "{defect} vs {scale}");
        // exponent ±θ_j at an essential pole gives trace −2 cos(π θ_j)
        let tr = mono.get(PoleLabel::T(1)).unwrap().trace();
        assert!((tr + 2.0 * (PI * 0.3).cos()).norm() < 1e-7);
        // at infinity the exponents of w are shifted by one
        let tr_inf = mono.get(PoleLabel::Infinity).unwrap().trace();
        assert!((tr_inf - 2.0 * (PI * 0.9).cos()).norm() < 1e-7, "{tr_inf}");
    }

    #[test]
    fn other_reading_is_not_apparent() {
        use super::super::{hamiltonians_with, UkConvention};
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4, 0.9]).unwrap();
        let ph = PhasePoint::new(
            vec![C64::new(2.0, 1.0), C64::new(-1.0, 0.5)],
            vec![C64::new(0.5, -0.7), C64::new(3.0, 0.2)],
            vec![C64::new(0.4, 0.1), C64::new(-0.3, 0.8)],
        );
        let tol = Tolerances::default();
        let l = hamiltonians_with(&cfg, &ph, UkConvention::SkipOwnPole, &tol).unwrap();
        let pot = RationalPotential::with_residues(&cfg, &ph, l);
        let mono = companion_monodromy(&pot, &tol).unwrap();
        let worst = mono
            .lambda_loops
            .iter()
            .map(|m| max_abs(&(m + identity(2))))
            .fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }
}
