use super::{eul, gauge_residual, integer_offset, GaugeTransform, MatLaurent, ReducedConnection};
use crate::error::{Error, Result};
use crate::linalg::{commutant_basis, determinant, identity, max_abs, CMatrix};
use crate::tol::Tolerances;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MildVerdict {
    Mild,
    /// A meromorphic, non-holomorphic automorphism of the germ.
    NotMild {
        witness: GaugeTransform,
        /// 1-based entry `(u, v)` of the commutant element carrying a
        /// negative power of `w`.
        entry: (usize, usize),
        /// Largest coefficient of `G·A − A·G + w·G'`.
        residual: f64,
    },
}

impl MildVerdict {
    pub fn is_mild(&self) -> bool {
        matches!(self, MildVerdict::Mild)
    }
}

/// Decides whether every meromorphic automorphism of a reduced germ is
/// holomorphic.
///
/// Automorphisms are exactly `w^Λ g w^{−Λ}` with `g` in the commutant of the
/// Euler model, and such a gauge has a pole iff `g_uv ≠ 0` for some `(u, v)`
/// with `Λ_u − Λ_v` a negative integer. It is enough to inspect a basis of
/// the commutant: if some basis element `g` has such an entry then so does
/// `I + t g` for every `t ≠ 0`, and that matrix is invertible for small `t`.
pub fn is_mild(reduced: &ReducedConnection, tol: &Tolerances) -> Result<MildVerdict> {
    let lambda = &reduced.lambda;
    let m = lambda.len();
    let c = eul(reduced, tol);
    let basis = commutant_basis(&[c], tol)?;
    let mut offending = None;
    'search: for g in &basis {
        let scale = max_abs(g);
        for u in 0..m {
            for v in 0..m {
                let negative = integer_offset(lambda[u] - lambda[v], tol.cluster).is_some_and(|k| k < 0);
                if negative && g[(u, v)].norm() > tol.cluster * scale {
                    offending = Some((g / C64::new(scale, 0.0), (u, v)));
                    break 'search;
                }
            }
        }
    }
    let Some((g, (u0, v0))) = offending else {
        return Ok(MildVerdict::Mild);
    };

    let t = [1.0, -1.0, 0.5, -0.5, 0.25, -0.25, 0.125, 0.0625]
        .into_iter()
        .find(|&t| determinant(&(identity(m) + &g * C64::new(t, 0.0))).norm() >= 1e-3)
        .unwrap_or(1.0 / 32.0);
    let h = identity(m) + &g * C64::new(t, 0.0);
    let tiny = tol.cluster;
    let mut witness = MatLaurent::zero(m);
    for u in 0..m {
        for v in 0..m {
            if h[(u, v)].norm() <= tiny {
                continue;
            }
            let Some(k) = integer_offset(lambda[u] - lambda[v], tol.cluster) else {
                return Err(Error::Conditioning(format!(
                    "commutant element couples entries {} and {} with non-integer exponent gap",
                    u + 1,
                    v + 1
                )));
            };
            let mut e = CMatrix::zeros(m, m);
            e[(u, v)] = h[(u, v)];
            witness.add_term(k, &e);
        }
    }
    let residual = gauge_residual(&reduced.germ, &witness, &reduced.germ, None);
    Ok(MildVerdict::NotMild {
        witness,
        entry: (u0 + 1, v0 + 1),
        residual,
    })
}
