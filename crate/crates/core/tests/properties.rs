mod common;

use common::*;
use isolab::braid::{apply_braid, orbit_bfs, pure_braid_generators, BraidWord, RepTuple};
use isolab::connection::{
    check_reduced, eul, gauge_residual, is_mild, local_rh_residues, pdl_reduce, GermConnection, ReducedConnection,
};
use isolab::garnier::{
    companion_extract, hamiltonians, normalized_form, GarnierConfig, PhasePoint, RationalPotential,
};
use isolab::linalg::{commutant_basis, commutator, diag, expm, identity, rel_diff, solve_conjugator, CMatrix};
use isolab::{Tolerances, C64};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn tuple_diff(a: &RepTuple, b: &RepTuple) -> f64 {
    a.matrices.iter().zip(&b.matrices).map(|(x, y)| rel_diff(x, y)).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn braid_relations_hold(seed in any::<u64>(), n in 3usize..=6, m in 1usize..=3, pick in 0usize..16) {
        let mut rng = rng(seed);
        let t = random_tuple(&mut rng, n, m, false);
        let i = 1 + pick % (n - 2);
        let w = |l: &[(usize, i8)]| apply_braid(&BraidWord::new(l.to_vec()), &t).unwrap();
        prop_assert!(tuple_diff(&w(&[(i, 1), (i + 1, 1), (i, 1)]), &w(&[(i + 1, 1), (i, 1), (i + 1, 1)])) < 1e-9);
        if i + 2 < n {
            prop_assert!(tuple_diff(&w(&[(i, 1), (i + 2, 1)]), &w(&[(i + 2, 1), (i, 1)])) < 1e-9);
        }
        prop_assert!(tuple_diff(&w(&[(i, 1), (i, -1)]), &t) < 1e-9);
    }

    #[test]
    fn braids_keep_product_and_pure_braids_keep_traces(seed in any::<u64>(), n in 3usize..=6, m in 1usize..=3) {
        let mut rng = rng(seed);
        let t = tame_closed_tuple(&mut rng, n, m);
        let letters: Vec<(usize, i8)> = (0..6)
            .map(|_| (rng.gen_range(1..n), if rng.gen_bool(0.5) { 1 } else { -1 }))
            .collect();
        let img = apply_braid(&BraidWord::new(letters), &t).unwrap();
        prop_assert!(rel_diff(&img.product(), &t.product()) < 1e-9);
        for w in pure_braid_generators(n) {
            let img = apply_braid(&w, &t).unwrap();
            for (a, b) in img.matrices.iter().zip(&t.matrices) {
                prop_assert!((a.trace() - b.trace()).norm() < 1e-9 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn conjugator_is_recovered(seed in any::<u64>(), n in 3usize..=5, m in 1usize..=3) {
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let t = random_tuple(&mut rng, n, m, false);
        let g = near_identity(&mut rng, m);
        let dst = t.conjugate_by(&g, &tol).unwrap();
        let h = solve_conjugator(&t.matrices, &dst.matrices, &tol, seed).unwrap().expect("conjugate tuples");
        let h_inv = h.clone().try_inverse().unwrap();
        for (s, d) in t.matrices.iter().zip(&dst.matrices) {
            prop_assert!(rel_diff(&(&h_inv * s * &h), d) < 1e-8);
        }
    }

    #[test]
    fn commutant_elements_commute(seed in any::<u64>(), m in 1usize..=4, k in 1usize..=3) {
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let fam = commuting_family(&mut rng, k);
        let basis = commutant_basis(&fam, &tol).unwrap();
        prop_assert!(!basis.is_empty());
        for g in &basis {
            for a in &fam {
                prop_assert!(commutator(g, a).norm() < 1e-8 * (g.norm() * a.norm()).max(1.0));
            }
        }
        // generic matrices of size m only commute with scalars
        let a = random_matrix(&mut rng, m, 1.0);
        let b = random_matrix(&mut rng, m, 1.0);
        prop_assert_eq!(commutant_basis(&[a, b], &tol).unwrap().len(), 1);
    }

    #[test]
    fn pdl_gauge_roundtrip_and_eul_spectrum(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let germ = random_germ(&mut rng);
        let red = pdl_reduce(&germ, &tol).unwrap();
        prop_assert!(check_reduced(&red.reduced.germ, &tol).unwrap().reduced);
        let res = gauge_residual(&germ, &red.gauge, &red.reduced.germ, Some(germ.degree() as i64));
        prop_assert!(res < 1e-8, "residual {}", res);
        let ev = eul(&red.reduced, &tol).schur().eigenvalues().unwrap();
        for z in ev.iter() {
            prop_assert!(z.re > -1e-9 && z.re < 1.0, "eigenvalue {}", z);
        }
    }

    #[test]
    fn local_rh_inverts_the_exponential(seed in any::<u64>(), k in 1usize..=4) {
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let fam = commuting_family(&mut rng, k);
        let logs = local_rh_residues(&fam, &tol).unwrap();
        for (r, m) in logs.iter().zip(&fam) {
            prop_assert!(rel_diff(&expm(&(r * c(0.0, 2.0 * PI))), m) < 1e-9);
        }
    }

    #[test]
    fn mildness_survives_diagonal_conjugation(
        gap in 1i64..=3,
        base in -0.5f64..0.5,
        sup in prop::option::of(-2.0f64..2.0),
        scale in 0.2f64..5.0,
    ) {
        // diag(base + gap, base) with an optional resonant monomial
        let tol = Tolerances::default();
        let top = c(base + gap as f64, 0.0);
        let mut coeffs = vec![diag(&[top, c(base, 0.0)])];
        for k in 1..=gap {
            let mut a = CMatrix::zeros(2, 2);
            if k == gap {
                a[(0, 1)] = c(sup.unwrap_or(0.0), 0.0);
            }
            coeffs.push(a);
        }
        let d = diag(&[c(scale, 0.0), c(1.0, 0.0)]);
        let d_inv = diag(&[c(1.0 / scale, 0.0), c(1.0, 0.0)]);
        let conj: Vec<CMatrix> = coeffs.iter().map(|a| &d_inv * a * &d).collect();
        let a = ReducedConnection::new(GermConnection::new(coeffs).unwrap(), &tol).unwrap();
        let b = ReducedConnection::new(GermConnection::new(conj).unwrap(), &tol).unwrap();
        prop_assert_eq!(is_mild(&a, &tol).unwrap().is_mild(), is_mild(&b, &tol).unwrap().is_mild());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn orbit_size_is_a_class_invariant(seed in any::<u64>()) {
        // finite orbits from the quaternion group, moved by a braid and a conjugation
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let units = {
            let (x, y, z) = common::gaussian::quaternion_units();
            [x, y, z, common::gaussian::neg(&x), common::gaussian::neg(&y), common::gaussian::neg(&z)]
        };
        let mut mats: Vec<CMatrix> = (0..3).map(|_| common::gaussian::to_cmatrix(&units[rng.gen_range(0..6)])).collect();
        let head = mats.iter().fold(identity(2), |acc, a| acc * a);
        mats.push(head.try_inverse().unwrap());
        let t = RepTuple::new(mats, true, &tol).unwrap();
        let moved = apply_braid(&BraidWord::new(vec![(1, 1), (3, -1), (2, 1)]), &t)
            .unwrap()
            .conjugate_by(&near_identity(&mut rng, 2), &tol)
            .unwrap();
        let a = orbit_bfs(&t, 1000, &tol, 5).unwrap();
        let b = orbit_bfs(&moved, 1000, &tol, 5).unwrap();
        prop_assert!(a.is_finite());
        prop_assert_eq!(a.size(), b.size());
    }

    #[test]
    fn hamiltonian_is_quadratic_in_momentum(seed in any::<u64>(), n in 1usize..=3) {
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let theta: Vec<C64> = (0..n + 3).map(|_| c(rng.gen_range(0.1..1.9), 0.0)).collect();
        let config = GarnierConfig::new(theta).unwrap();
        let t: Vec<C64> = (0..n).map(|k| c(2.0 + k as f64, 1.0 + 0.5 * k as f64)).collect();
        let lambda: Vec<C64> = (0..n).map(|k| c(-1.0 - k as f64, 0.7)).collect();
        let h = |s: f64| {
            let nu = vec![c(s, 0.0); n];
            hamiltonians(&config, &PhasePoint::new(t.clone(), lambda.clone(), nu), &tol).unwrap()
        };
        let (h0, h1, h2, h3) = (h(0.0), h(1.0), h(2.0), h(3.0));
        for i in 0..n {
            // third finite difference of a quadratic vanishes
            let d3 = h3[i] - 3.0 * h2[i] + 3.0 * h1[i] - h0[i];
            prop_assert!(d3.norm() < 1e-9 * h3[i].norm().max(1.0));
        }
    }

    #[test]
    fn normalized_form_roundtrip(seed in any::<u64>(), n in 1usize..=3) {
        let tol = Tolerances::default();
        let mut rng = rng(seed);
        let theta: Vec<C64> = (0..n + 3).map(|_| crand(&mut rng, 1.5)).collect();
        let config = GarnierConfig::new(theta).unwrap();
        let t: Vec<C64> = (0..n).map(|k| c(2.0 + k as f64, 1.0) + crand(&mut rng, 0.3)).collect();
        let lambda: Vec<C64> = (0..n).map(|k| c(-1.0 - k as f64, -0.8) + crand(&mut rng, 0.3)).collect();
        let nu: Vec<C64> = (0..n).map(|_| crand(&mut rng, 1.0)).collect();
        let phase = PhasePoint::new(t, lambda, nu.clone());
        let pot = RationalPotential::new(&config, &phase, &tol).unwrap();
        for theta_n in [None, Some(c(2.0, 0.0) - config.theta_n())] {
            let rec = companion_extract(&normalized_form(&config, &phase, theta_n, &tol).unwrap(), &tol).unwrap();
            for i in 0..n {
                prop_assert!((rec.nu[i] - nu[i]).norm() < 1e-8);
                prop_assert!((rec.l[i] - pot.l[i]).norm() < 1e-8 * pot.l[i].norm().max(1.0));
            }
        }
    }
}
