//! Adaptive Dormand–Prince 5(4) integration of complex systems over a real
//! parameter interval.

use crate::error::{Error, Result};
use crate::tol::Tolerances;
use crate::C64;

/// Right-hand side plus optional hooks for step vetting and observation.
pub trait OdeSystem {
    fn rhs(&mut self, s: f64, y: &[C64], dy: &mut [C64]) -> Result<()>;

    /// Returns a description when `y` at `s` violates a domain constraint;
    /// such steps are rejected and retried with half the step size.
    fn check(&mut self, _s: f64, _y: &[C64]) -> Option<String> {
        None
    }

    /// Called after every accepted step.
    fn accepted(&mut self, _s: f64, _y: &[C64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step, relative to the interval length.
    pub min_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// differences between the fifth and fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    pub fn new(tol: &Tolerances) -> Self {
        Self {
            rtol: tol.ode_rtol,
            atol: tol.ode_atol,
            min_step: 1e-12,
            max_steps: 1_000_000,
        }
    }

    /// Integrates `y` from `s0` to `s1 > s0` in place.
    pub fn integrate(&self, sys: &mut impl OdeSystem, y: &mut [C64], s0: f64, s1: f64) -> Result<OdeStats> {
        let mut stats = OdeStats::default();
        let span = s1 - s0;
        if span <= 0.0 {
            return Ok(stats);
        }
        let n = y.len();
        let h_min = self.min_step * span;
        let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        let mut y5 = vec![C64::new(0.0, 0.0); n];
        let mut s = s0;
        let mut h = (0.01 * span).min(span);
        sys.rhs(s, y, &mut k[0])?;
        stats.evaluations += 1;
        let mut last_violation = None;

        while s < s1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepUnderflow { at: s });
            }
            let final_step = s + h >= s1;
            if final_step {
                h = s1 - s;
            }
            let stages: [(f64, &[f64]); 5] = [
                (C2, &[A21]),
                (C3, &[A31, A32]),
                (C4, &[A41, A42, A43]),
                (C5, &[A51, A52, A53, A54]),
                (1.0, &[A61, A62, A63, A64, A65]),
            ];
            for (stage, (c, row)) in stages.iter().enumerate() {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in row.iter().enumerate() {
                        acc += k[j][i] * (h * a);
                    }
                    tmp[i] = acc;
                }
                let (done, rest) = k.split_at_mut(stage + 1);
                let _ = done;
                sys.rhs(s + c * h, &tmp, &mut rest[0])?;
            }
            for i in 0..n {
                y5[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
            }
            sys.rhs(s + h, &y5, &mut k[6])?;
            stats.evaluations += 6;

            let mut err = 0.0_f64;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
                let sc = self.atol + self.rtol * y[i].norm().max(y5[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() || y5.iter().any(|z| !z.is_finite()) {
                err = f64::INFINITY;
            }
            let violation = if err <= 1.0 { sys.check(s + h, &y5) } else { None };

            if err <= 1.0 && violation.is_none() {
                s = if final_step { s1 } else { s + h };
                y.copy_from_slice(&y5);
                k.swap(0, 6);
                stats.accepted += 1;
                sys.accepted(s, y);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
            } else {
                stats.rejected += 1;
                if let Some(v) = violation {
                    last_violation = Some(v);
                    h *= 0.5;
                } else {
                    h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                }
                if h < h_min {
                    return Err(match last_violation {
                        Some(what) => Error::Degeneracy {
                            what,
                            location: format!("s = {s:.6}"),
                        },
                        None => Error::StepUnderflow { at: s },
                    });
                }
            }
        }
        Ok(stats)
    }
}
