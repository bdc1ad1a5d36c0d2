use super::{apply_braid, pure_braid_generators, BraidWord, RepTuple};
use crate::error::{Error, Result};
use crate::linalg::{normalize_conjugator, solve_conjugator, CMatrix};
use crate::tol::Tolerances;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Decimal digits kept when rounding trace coordinates.
const FINGERPRINT_DIGITS: i32 = 6;
/// A coordinate whose scaled fractional part lies this close to one half
/// is also looked up under its other rounding.
const PROBE_MARGIN: f64 = 0.05;
/// Above this many ambiguous coordinates the lookup scans every bucket.
const MAX_PROBE_BITS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitKind {
    /// Closure reached; fingerprints are sorted.
    Finite { size: usize, fingerprints: Vec<String> },
    ExceededCap { visited: usize },
}

/// Conjugator relating the seed to its image under one pure-braid
/// generator, when that image lies in the seed's class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorImage {
    pub word: BraidWord,
    #[serde(with = "crate::json::matrix")]
    pub conjugator: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitVerdict {
    #[serde(flatten)]
    pub kind: OrbitKind,
    pub generator_images: Vec<GeneratorImage>,
}

impl OrbitVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self.kind, OrbitKind::Finite { .. })
    }

    pub fn size(&self) -> Option<usize> {
        match self.kind {
            OrbitKind::Finite { size, .. } => Some(size),
            OrbitKind::ExceededCap { .. } => None,
        }
    }
}

/// Traces of `M_i`, `M_i M_j` (i<j) and `M_i M_j M_k` (i<j<k).
fn trace_coordinates(t: &RepTuple) -> Vec<C64> {
    let mats = &t.matrices;
    let n = mats.len();
    let mut out = Vec::with_capacity(n + n * n / 2 + n * n * n / 6);
    out.extend(mats.iter().map(|a| a.trace()));
    for i in 0..n {
        for j in (i + 1)..n {
            let ij = &mats[i] * &mats[j];
            out.push(ij.trace());
            for k in (j + 1)..n {
                out.push((&ij * &mats[k]).trace());
            }
        }
    }
    out
}

struct Fingerprint {
    coords: Vec<C64>,
    /// Nearest rounding of each real coordinate.
    key: Vec<i64>,
    /// Positions of coordinates whose rounding is ambiguous, with the
    /// alternative value.
    ambiguous: Vec<(usize, i64)>,
}

impl Fingerprint {
    fn new(t: &RepTuple) -> Self {
        let coords = trace_coordinates(t);
        let scale = 10f64.powi(FINGERPRINT_DIGITS);
        let mut key = Vec::with_capacity(2 * coords.len());
        let mut ambiguous = Vec::new();
        for x in coords.iter().flat_map(|z| [z.re, z.im]) {
            let y = x * scale;
            let r = y.round();
            let frac = y - y.floor();
            if (frac - 0.5).abs() < PROBE_MARGIN {
                let alt = if r > y { r - 1.0 } else { r + 1.0 };
                ambiguous.push((key.len(), alt as i64));
            }
            key.push(r as i64);
        }
        Self { coords, key, ambiguous }
    }

    /// All keys under which a class with these invariants may be stored.
    fn probe_keys(&self) -> Option<Vec<Vec<i64>>> {
        if self.ambiguous.len() > MAX_PROBE_BITS {
            return None;
        }
        let mut keys = vec![self.key.clone()];
        for &(pos, alt) in &self.ambiguous {
            let extra: Vec<Vec<i64>> = keys
                .iter()
                .map(|k| {
                    let mut k = k.clone();
                    k[pos] = alt;
                    k
                })
                .collect();
            keys.extend(extra);
        }
        Some(keys)
    }

    fn close_to(&self, other: &Fingerprint, rel: f64) -> bool {
        self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).norm() <= rel * a.norm().max(b.norm()).max(1.0))
    }

    fn digest(&self) -> String {
        // FNV-1a over the little-endian key
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.key {
            for byte in v.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }
}

struct OrbitStore {
    tuples: Vec<RepTuple>,
    prints: Vec<Fingerprint>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

/// Images whose balanced matrices are worse conditioned than this are
/// neither expanded nor counted; their trace coordinates are unreliable.
const MAX_CONDITION: f64 = 1e8;

type Candidate = Option<(RepTuple, CMatrix, Fingerprint)>;

/// Largest `‖A‖_F ‖A⁻¹‖_F` over the tuple.
fn condition(t: &RepTuple) -> f64 {
    t.matrices
        .iter()
        .map(|a| match a.clone().try_inverse() {
            Some(inv) if inv.iter().all(|z| z.is_finite()) => a.norm() * inv.norm(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Relative agreement of trace coordinates required before a conjugator
/// solve is attempted.
const COORD_MATCH: f64 = 1e-6;

impl OrbitStore {
    fn find(&self, t: &RepTuple, fp: &Fingerprint, tol: &Tolerances, seed: u64) -> Result<Option<(usize, CMatrix)>> {
        let candidates: Vec<usize> = match fp.probe_keys() {
            Some(keys) => {
                let mut c: Vec<usize> = keys
                    .iter()
                    .filter_map(|k| self.buckets.get(k))
                    .flatten()
                    .copied()
                    .collect();
                c.sort_unstable();
                c.dedup();
                c
            }
            None => (0..self.tuples.len()).collect(),
        };
        for idx in candidates {
            if !fp.close_to(&self.prints[idx], COORD_MATCH) {
                continue;
            }
            match solve_conjugator(&self.tuples[idx].matrices, &t.matrices, tol, seed) {
                Ok(Some(g)) => return Ok(Some((idx, g))),
                Ok(None) | Err(Error::IntertwinerNotConjugator) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    fn insert(&mut self, t: RepTuple, fp: Fingerprint) -> usize {
        let idx = self.tuples.len();
        self.buckets.entry(fp.key.clone()).or_default().push(idx);
        self.tuples.push(t);
        self.prints.push(fp);
        idx
    }
}

/// Breadth-first enumeration of the pure-braid orbit of the conjugacy class
/// of `tuple`.
///
/// Classes are bucketed by rounded trace coordinates; every candidate match
/// is confirmed by an explicit conjugator, so equal fingerprints never merge
/// non-conjugate tuples. Each frontier is expanded in parallel and merged
/// in a fixed order, so the verdict does not depend on scheduling.
///
/// Representatives are stored in balanced form. Images that stay badly
/// conditioned even after balancing are skipped; if any were skipped, a
/// closed search is reported as a conditioning error instead of `Finite`.
pub fn orbit_bfs(tuple: &RepTuple, cap: usize, tol: &Tolerances, seed: u64) -> Result<OrbitVerdict> {
    tuple.validate(tol)?;
    if cap == 0 {
        return Err(Error::Invalid("orbit cap must be at least 1".into()));
    }
    let gens = pure_braid_generators(tuple.n);
    let mut store = OrbitStore {
        tuples: Vec::new(),
        prints: Vec::new(),
        buckets: HashMap::new(),
    };
    // work with well-conditioned representatives of each class
    let (start, h) = tuple.balanced();
    let h_inv = crate::linalg::inverse(&h, tol.singular)?;
    let first = Fingerprint::new(&start);
    store.insert(start, first);
    let mut frontier = vec![0usize];
    let mut generator_images = Vec::new();
    let mut depth = 0usize;

    let mut pruned = 0usize;

    while !frontier.is_empty() {
        let images: Vec<Result<Vec<Candidate>>> = frontier
            .par_iter()
            .map(|&idx| {
                gens.iter()
                    .map(|w| {
                        let img = match apply_braid(w, &store.tuples[idx]) {
                            Ok(img) => img,
                            // a letter of the word lost invertibility to rounding
                            Err(Error::Singular { .. }) => return Ok(None),
                            Err(e) => return Err(e),
                        };
                        let (img, k) = img.balanced();
                        if condition(&img) > MAX_CONDITION {
                            return Ok(None);
                        }
                        let fp = Fingerprint::new(&img);
                        Ok(Some((img, k, fp)))
                    })
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for batch in images {
            for (gi, cand) in batch?.into_iter().enumerate() {
                let Some((img, k, fp)) = cand else {
                    pruned += 1;
                    continue;
                };
                match store.find(&img, &fp, tol, seed)? {
                    Some((idx, g)) => {
                        if depth == 0 && idx == 0 {
                            let k_inv = crate::linalg::inverse(&k, tol.singular)?;
                            generator_images.push(GeneratorImage {
                                word: gens[gi].clone(),
                                conjugator: normalize_conjugator(&h * g * k_inv * &h_inv),
                            });
                        }
                    }
                    None => {
                        if store.tuples.len() >= cap {
                            return Ok(OrbitVerdict {
                                kind: OrbitKind::ExceededCap {
                                    visited: store.tuples.len() + 1,
                                },
                                generator_images,
                            });
                        }
                        next.push(store.insert(img, fp));
                    }
                }
            }
        }
        frontier = next;
        depth += 1;
    }

    if pruned > 0 {
        return Err(Error::Conditioning(format!(
            "orbit closure not verified: {pruned} images exceeded condition number {MAX_CONDITION:e} after {} classes",
            store.tuples.len()
        )));
    }

    let mut fingerprints: Vec<String> = store.prints.iter().map(Fingerprint::digest).collect();
    fingerprints.sort();
    Ok(OrbitVerdict {
        kind: OrbitKind::Finite {
            size: store.tuples.len(),
            fingerprints,
        },
        generator_images,
    })
}
