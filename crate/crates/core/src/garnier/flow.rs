use super::hamiltonian::partials;
use super::{closest_pair, GarnierConfig, PhasePoint};
use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeSystem};
use crate::tol::Tolerances;
use crate::C64;
use serde::{Deserialize, Serialize};

/// A polyline in `t`-space; each waypoint lists all `N` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    #[serde(with = "crate::json::complex_vec_vec")]
    pub waypoints: Vec<Vec<C64>>,
}

impl FlowPath {
    pub fn new(waypoints: Vec<Vec<C64>>) -> Self {
        Self { waypoints }
    }

    /// The same polyline traversed backwards.
    pub fn reversed(&self) -> Self {
        Self::new(self.waypoints.iter().rev().cloned().collect())
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| leg_length(&w[0], &w[1])).sum()
    }
}

fn leg_length(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x).norm_sqr()).sum::<f64>().sqrt()
}

/// One accepted integration step, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub arclength: f64,
    pub t: Vec<C64>,
    pub lambda: Vec<C64>,
    pub nu: Vec<C64>,
}

struct Leg<'a> {
    a: &'a [C64],
    t0: &'a [C64],
    dt: Vec<C64>,
    sep: f64,
    arc0: f64,
    len: f64,
    samples: Option<&'a mut Vec<TrajectorySample>>,
}

impl Leg<'_> {
    fn t_at(&self, s: f64) -> Vec<C64> {
        self.t0.iter().zip(&self.dt).map(|(t, d)| t + d * s).collect()
    }
}

impl OdeSystem for Leg<'_> {
    fn rhs(&mut self, s: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let n = self.t0.len();
        let t = self.t_at(s);
        let (lam, nu) = y.split_at(n);
        let (d_nu, d_lam) = partials(self.a, &t, lam, nu);
        for k in 0..n {
            let mut dl = C64::new(0.0, 0.0);
            let mut dn = C64::new(0.0, 0.0);
            for i in 0..n {
                dl += self.dt[i] * d_nu[i][k];
                dn -= self.dt[i] * d_lam[i][k];
            }
            dy[k] = dl;
            dy[n + k] = dn;
        }
        Ok(())
    }

    fn check(&mut self, s: f64, y: &[C64]) -> Option<String> {
        let n = self.t0.len();
        closest_pair(&self.t_at(s), &y[..n], self.sep)
    }

    fn accepted(&mut self, s: f64, y: &[C64]) {
        let n = self.t0.len();
        let t = self.t_at(s);
        let arclength = self.arc0 + s * self.len;
        if let Some(out) = self.samples.as_deref_mut() {
            out.push(TrajectorySample {
                arclength,
                t,
                lambda: y[..n].to_vec(),
                nu: y[n..].to_vec(),
            });
        }
    }
}

fn integrate_leg(
    a: &[C64],
    w0: &[C64],
    w1: &[C64],
    y: &mut [C64],
    tol: &Tolerances,
    arc0: f64,
    samples: Option<&mut Vec<TrajectorySample>>,
) -> Result<()> {
    let mut leg = Leg {
        a,
        t0: w0,
        dt: w0.iter().zip(w1).map(|(x, y)| y - x).collect(),
        sep: tol.separation,
        arc0,
        len: leg_length(w0, w1),
        samples,
    };
    Dopri5::new(tol).integrate(&mut leg, y, 0.0, 1.0).map(|_| ())
}

fn check_path(config: &GarnierConfig, phase0: &PhasePoint, path: &FlowPath, tol: &Tolerances) -> Result<()> {
    phase0.validate(config, tol)?;
    let n = config.n_params;
    if let Some(w) = path.waypoints.iter().find(|w| w.len() != n) {
        return Err(Error::Dimension(format!("waypoint has {} coordinates, expected {n}", w.len())));
    }
    if let Some(first) = path.waypoints.first() {
        let scale = first.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if leg_length(first, &phase0.t) > 1e-9 * scale {
            return Err(Error::Invalid("path must start at the phase point's t".into()));
        }
    }
    Ok(())
}

fn with_leg(e: Error, leg_idx: usize) -> Error {
    match e {
        Error::Degeneracy { what, location } => Error::Degeneracy {
            what,
            location: format!("leg {} at {location}", leg_idx + 1),
        },
        other => other,
    }
}

fn run(
    config: &GarnierConfig,
    phase0: &PhasePoint,
    path: &FlowPath,
    tol: &Tolerances,
    mut samples: Option<&mut Vec<TrajectorySample>>,
) -> Result<PhasePoint> {
    check_path(config, phase0, path, tol)?;
    let n = config.n_params;
    let a = config.coeffs();
    let mut y: Vec<C64> = phase0.lambda.iter().chain(&phase0.nu).copied().collect();
    let mut arc = 0.0;
    if let Some(out) = samples.as_deref_mut() {
        out.push(TrajectorySample {
            arclength: 0.0,
            t: phase0.t.clone(),
            lambda: phase0.lambda.clone(),
            nu: phase0.nu.clone(),
        });
    }
    let mut t_end = phase0.t.clone();
    for (leg_idx, w) in path.waypoints.windows(2).enumerate() {
        let len = leg_length(&w[0], &w[1]);
        if len == 0.0 {
            continue;
        }
        integrate_leg(&a, &w[0], &w[1], &mut y, tol, arc, samples.as_deref_mut()).map_err(|e| with_leg(e, leg_idx))?;
        arc += len;
        t_end = w[1].clone();
    }
    Ok(PhasePoint::new(t_end, y[..n].to_vec(), y[n..].to_vec()))
}

/// Nesting depth of detours around movable singularities.
const MAX_DETOUR_DEPTH: usize = 3;

/// True when `p` lies in the closed triangle `(a, b, c)` or within `margin`
/// of its boundary.
fn near_triangle(p: C64, a: C64, b: C64, c: C64, margin: f64) -> bool {
    let cross = |u: C64, v: C64| u.re * v.im - u.im * v.re;
    let (d1, d2, d3) = (cross(b - a, p - a), cross(c - b, p - b), cross(a - c, p - c));
    let inside = (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0);
    let edge = |u: C64, v: C64| {
        let d = v - u;
        let s = if d.norm_sqr() == 0.0 { 0.0 } else { (((p - u) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0) };
        (p - (u + d * s)).norm()
    };
    inside || edge(a, b) < margin || edge(b, c) < margin || edge(c, a) < margin
}

/// Whether replacing the leg `w0 → w1` by `w0 → mid → w1` sweeps across a
/// fixed singularity (`t_i ∈ {0, 1}` or `t_i = t_j`).
fn detour_is_clear(w0: &[C64], mid: &[C64], w1: &[C64], margin: f64) -> bool {
    let n = w0.len();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    for i in 0..n {
        for p in [zero, one] {
            if near_triangle(p, w0[i], mid[i], w1[i], margin) {
                return false;
            }
        }
        for j in i + 1..n {
            if near_triangle(zero, w0[i] - w0[j], mid[i] - mid[j], w1[i] - w1[j], margin) {
                return false;
            }
        }
    }
    true
}

fn leg_with_detours(a: &[C64], w0: &[C64], w1: &[C64], y: &mut Vec<C64>, tol: &Tolerances, depth: usize) -> Result<()> {
    let saved = y.clone();
    let err = match integrate_leg(a, w0, w1, y, tol, 0.0, None) {
        Ok(()) => return Ok(()),
        Err(e @ (Error::Degeneracy { .. } | Error::StepUnderflow { .. })) if depth < MAX_DETOUR_DEPTH => e,
        Err(e) => return Err(e),
    };
    for offset in [0.3, -0.3, 0.6, -0.6] {
        let mid: Vec<C64> = w0
            .iter()
            .zip(w1)
            .map(|(p, q)| (p + q) / 2.0 + (q - p) * C64::new(0.0, offset))
            .collect();
        if !detour_is_clear(w0, &mid, w1, tol.separation) {
            continue;
        }
        y.clone_from(&saved);
        if leg_with_detours(a, w0, &mid, y, tol, depth + 1).is_ok() && leg_with_detours(a, &mid, w1, y, tol, depth + 1).is_ok() {
            return Ok(());
        }
    }
    y.clone_from(&saved);
    Err(err)
}

/// Analytic continuation along the path. Legs that run into a movable
/// singularity of the `(λ, ν)` chart (a collision of some `λ_k` with
/// `0, 1, t_j` or another `λ_j`) are replaced by small triangular detours,
/// and interior waypoints sitting on such a singularity are nudged, always
/// without sweeping across a fixed singularity. By the Painlevé property
/// the endpoint does not depend on these choices, except that `λ`'s
/// colliding with each other may be relabelled.
pub fn continue_along(config: &GarnierConfig, phase0: &PhasePoint, path: &FlowPath, tol: &Tolerances) -> Result<PhasePoint> {
    check_path(config, phase0, path, tol)?;
    let n = config.n_params;
    let a = config.coeffs();
    let mut y: Vec<C64> = phase0.lambda.iter().chain(&phase0.nu).copied().collect();
    let mut wps = path.waypoints.clone();
    let mut k = 0;
    let mut nudges = 0;
    while k + 1 < wps.len() {
        let len = leg_length(&wps[k], &wps[k + 1]);
        if len == 0.0 {
            k += 1;
            continue;
        }
        let saved = y.clone();
        match leg_with_detours(&a, &wps[k], &wps[k + 1], &mut y, tol, 0) {
            Ok(()) => {
                k += 1;
                nudges = 0;
            }
            Err(e) => {
                y = saved;
                let interior = k + 2 < wps.len();
                if !interior || nudges >= 8 {
                    return Err(with_leg(e, k));
                }
                let next_len = leg_length(&wps[k + 1], &wps[k + 2]);
                let size = 0.3 * len.min(next_len.max(len * 1e-3)) * if nudges < 4 { 1.0 } else { 0.4 };
                let rot = C64::from_polar(size / len, std::f64::consts::FRAC_PI_2 * (nudges % 4) as f64 + 0.3);
                let cand: Vec<C64> = wps[k + 1]
                    .iter()
                    .zip(&wps[k])
                    .map(|(w1, w0)| w1 + (w1 - w0) * rot)
                    .collect();
                nudges += 1;
                if detour_is_clear(&wps[k], &cand, &wps[k + 1], tol.separation)
                    && detour_is_clear(&wps[k + 1], &cand, &wps[k + 2], tol.separation)
                {
                    wps[k + 1] = cand;
                }
            }
        }
    }
    let t_end = wps.last().cloned().unwrap_or_else(|| phase0.t.clone());
    Ok(PhasePoint::new(t_end, y[..n].to_vec(), y[n..].to_vec()))
}

/// Integrates the Garnier system along the path and returns the endpoint.
pub fn flow(config: &GarnierConfig, phase0: &PhasePoint, path: &FlowPath, tol: &Tolerances) -> Result<PhasePoint> {
    run(config, phase0, path, tol, None)
}

/// Like [`flow`], also returning every accepted step.
pub fn flow_with_trajectory(
    config: &GarnierConfig,
    phase0: &PhasePoint,
    path: &FlowPath,
    tol: &Tolerances,
) -> Result<(PhasePoint, Vec<TrajectorySample>)> {
    let mut samples = Vec::new();
    let end = run(config, phase0, path, tol, Some(&mut samples))?;
    Ok((end, samples))
}

#[cfg(test)]
mod tests {
    use super::super::hamiltonian_field;
    use super::*;

    fn sample() -> (GarnierConfig, PhasePoint) {
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4, 0.9]).unwrap();
        let ph = PhasePoint::new(
            vec![C64::new(2.0, 1.0), C64::new(-1.0, 0.5)],
            vec![C64::new(0.5, -0.7), C64::new(3.0, 0.2)],
            vec![C64::new(0.4, 0.1), C64::new(-0.3, 0.8)],
        );
        (cfg, ph)
    }

    fn dist(a: &PhasePoint, b: &PhasePoint) -> f64 {
        a.lambda
            .iter()
            .chain(&a.nu)
            .zip(b.lambda.iter().chain(&b.nu))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_length_and_reversal() {
        let (cfg, ph) = sample();
        let tol = Tolerances::default();
        let still = flow(&cfg, &ph, &FlowPath::new(vec![ph.t.clone(), ph.t.clone()]), &tol).unwrap();
        assert_eq!(still, ph);
        let path = FlowPath::new(vec![
            ph.t.clone(),
            vec![C64::new(2.2, 1.1), C64::new(-1.0, 0.5)],
            vec![C64::new(2.2, 1.1), C64::new(-1.1, 0.7)],
        ]);
        let (end, traj) = flow_with_trajectory(&cfg, &ph, &path, &tol).unwrap();
        assert!(traj.len() > 2);
        assert!((traj.last().unwrap().arclength - path.length()).abs() < 1e-12);
        let back = flow(&cfg, &end, &path.reversed(), &tol).unwrap();
        assert!(dist(&back, &ph) < 1e-8);
    }

    #[test]
    fn endpoint_derivative_matches_field() {
        let (cfg, ph) = sample();
        let tol = Tolerances::default();
        let field = hamiltonian_field(&cfg, &ph, &tol).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let mut t1 = ph.t.clone();
            t1[i] += h;
            let end = flow(&cfg, &ph, &FlowPath::new(vec![ph.t.clone(), t1]), &tol).unwrap();
            for k in 0..2 {
                let dl = (end.lambda[k] - ph.lambda[k]) / h;
                let dn = (end.nu[k] - ph.nu[k]) / h;
                assert!((dl - field[i].0[k]).norm() < 1e-2 * field[i].0[k].norm().max(1.0));
                assert!((dn - field[i].1[k]).norm() < 1e-2 * field[i].1[k].norm().max(1.0));
            }
        }
    }

    #[test]
    fn collision_is_reported() {
        let cfg = GarnierConfig::from_real(&[0.3, 0.7, 1.2, 0.4]).unwrap();
        let ph = PhasePoint::new(vec![C64::new(2.0, 0.0)], vec![C64::new(3.0, 1.0)], vec![C64::new(0.1, 0.0)]);
        // drag t_1 straight through the fixed pole 1
        let path = FlowPath::new(vec![ph.t.clone(), vec![C64::new(0.5, 0.0)]]);
        match flow(&cfg, &ph, &path, &Tolerances::default()) {
            Err(Error::Degeneracy { what, location }) => {
                assert!(what.contains("t_1") && what.contains('1'), "{what}");
                assert!(location.starts_with("leg 1"));
            }
            other => panic!("{other:?}"),
        }
    }
}
