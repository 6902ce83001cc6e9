mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;

use magwave::fields::{eval_bundle, Builtin, Field, FieldValues};
use magwave::integrators::cayley;
use magwave::invariants::{angular_momentum, angular_momentum_form};
use magwave::packet::{kinetic_residual, symplecticity_residual};

use common::{builtin, harmonic, random_packet, trig};

fn rng(seed: u64) -> rand::rngs::StdRng {
    rand::rngs::StdRng::seed_from_u64(seed)
}

fn all_fields() -> Vec<Builtin> {
    vec![
        trig(0.5),
        trig(0.0),
        builtin("penning"),
        builtin("sym_translation"),
        builtin("sym_rotation"),
        harmonic(1.7, 3),
    ]
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Central differences of every pointwise derivative the field reports.
fn pointwise_defect(field: &dyn Field, t: f64, x: &[f64]) -> f64 {
    let d = field.dim();
    let h = 1e-5;
    let at = |t: f64, x: &[f64]| eval_bundle(field, t, x);
    let f0 = at(t, x);
    let shifted = |c: usize, s: f64| {
        let mut y = x.to_vec();
        y[c] += s;
        at(t, &y)
    };
    let mut worst = 0.0f64;
    for c in 0..d {
        let (p, m): (FieldValues, FieldValues) = (shifted(c, h), shifted(c, -h));
        let dv = (p.v - m.v) / (2.0 * h);
        worst = worst.max(rel_err(f0.gv[c], dv));
        for k in 0..d {
            worst = worst.max(rel_err(f0.ja[(k, c)], (p.a[k] - m.a[k]) / (2.0 * h)));
            worst = worst.max(rel_err(f0.hv[(k, c)], (p.gv[k] - m.gv[k]) / (2.0 * h)));
            worst = worst.max(rel_err(f0.jdta[(k, c)], (p.dta[k] - m.dta[k]) / (2.0 * h)));
            for i in 0..d {
                worst = worst.max(rel_err(f0.ha[k][(i, c)], (p.ja[(k, i)] - m.ja[(k, i)]) / (2.0 * h)));
                for j in 0..d {
                    let fd = (p.ha[k][(i, j)] - m.ha[k][(i, j)]) / (2.0 * h);
                    worst = worst.max(rel_err(f0.ta(k, c, i, j), fd));
                }
            }
        }
    }
    let (p, m) = (at(t + h, x), at(t - h, x));
    for k in 0..d {
        worst = worst.max(rel_err(f0.dta[k], (p.a[k] - m.a[k]) / (2.0 * h)));
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vectorize_round_trip(seed in any::<u64>(), d in 1usize..=3, eps in 1e-6f64..1.0) {
        let pk = random_packet(&mut rng(seed), d, eps);
        let z = pk.vectorize(0.5);
        prop_assert_eq!(z.qb.len(), d + 2 * d * d);
        let back = z.devectorize().unwrap();
        let scale = pk.q_mat.camax().max(pk.p_mat.camax());
        prop_assert!((&back.q_mat - &pk.q_mat).camax() <= 4.0 * f64::EPSILON * scale);
        prop_assert!((&back.p_mat - &pk.p_mat).camax() <= 4.0 * f64::EPSILON * scale);
        prop_assert_eq!(back.q, pk.q);
        prop_assert_eq!(back.p, pk.p);
        prop_assert_eq!(back.phase, pk.phase);
    }

    #[test]
    fn symplectic_data_satisfy_the_quadratic_family(seed in any::<u64>(), d in 1usize..=3) {
        let pk = random_packet(&mut rng(seed), d, 0.01);
        prop_assert!(symplecticity_residual(&pk.q_mat, &pk.p_mat) < 1e-12);
        let z = pk.vectorize(0.0);
        prop_assert!(z.quadratic_family_residual() < 1e-11);
        prop_assert!(z.symplecticity_residual() < 1e-12);
    }

    #[test]
    fn kinetic_widths_keep_the_shifted_structure(seed in any::<u64>(), d in 1usize..=3) {
        // Y_M^T [[M - M^T, I], [-I, 0]] Y_M = Omega for any real M
        let mut r = rng(seed);
        let pk = random_packet(&mut r, d, 0.01);
        let m = DMatrix::from_fn(d, d, |_, _| rand::Rng::random_range(&mut r, -3.0..3.0));
        prop_assert!(kinetic_residual(&pk.q_mat, &pk.p_mat, &m) < 1e-11);
    }

    #[test]
    fn angular_momentum_is_skew(seed in any::<u64>(), d in 1usize..=3) {
        let mut r = rng(seed);
        let z = random_packet(&mut r, d, 0.2).vectorize(0.0);
        let l = angular_momentum(&z);
        prop_assert!((&l + l.transpose()).amax() < 1e-14);
        let a = DMatrix::from_fn(d, d, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let k = &a - a.transpose();
        let form = angular_momentum_form(&z, &k).unwrap();
        prop_assert!((form - 0.5 * (l.transpose() * &k).trace()).abs() < 1e-13);
    }

    #[test]
    fn pointwise_derivatives_match_differences(
        x in prop::array::uniform3(-1.5f64..1.5),
        t in 0.0f64..6.0,
    ) {
        for f in all_fields() {
            let defect = pointwise_defect(&f, t, &x[..f.dim()]);
            prop_assert!(defect < 1e-6, "{}: {defect:e}", f.id());
        }
    }

    #[test]
    fn translation_symmetry(x in prop::array::uniform2(-2.0f64..2.0), c in -3.0f64..3.0) {
        let f = builtin("sym_translation");
        let a = eval_bundle(&f, 0.0, &x);
        let b = eval_bundle(&f, 0.0, &[x[0] + c, x[1] + c]);
        prop_assert!((&a.a - &b.a).amax() < 1e-12);
        prop_assert!((a.v - b.v).abs() < 1e-12);
    }

    #[test]
    fn rotation_symmetry(x in prop::array::uniform2(-2.0f64..2.0), theta in 0.0f64..6.3) {
        let f = builtin("sym_rotation");
        let rot = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let xv = DVector::from_column_slice(&x);
        let rx = &rot * &xv;
        let a = eval_bundle(&f, 0.0, xv.as_slice());
        let b = eval_bundle(&f, 0.0, rx.as_slice());
        prop_assert!((&rot * &a.a - &b.a).amax() < 1e-12);
        prop_assert!((a.v - b.v).abs() < 1e-12);
    }

    #[test]
    fn penning_is_linear_and_quadratic(x in prop::array::uniform3(-2.0f64..2.0)) {
        let f = builtin("penning");
        let m = f.linear_a_matrix().unwrap();
        let out = eval_bundle(&f, 0.0, &x);
        let xv = DVector::from_column_slice(&x);
        prop_assert!((&out.a - &m * &xv).amax() < 1e-12);
        prop_assert_eq!(&out.ja, &m);
        prop_assert!(out.ha.iter().all(|h| h.amax() == 0.0));
        let hv = DMatrix::from_diagonal(&DVector::from_column_slice(&[-113.25, -113.25, 226.5]));
        prop_assert_eq!(&out.hv, &hv);
        prop_assert!((out.v - 0.5 * xv.dot(&(&hv * &xv))).abs() < 1e-11);
    }

    #[test]
    fn cayley_of_skew_is_orthogonal(seed in any::<u64>(), n in 1usize..=7) {
        let mut r = rng(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -2.0..2.0));
        let x = &a - a.transpose();
        let c = cayley(&x).unwrap();
        prop_assert!((c.transpose() * &c - DMatrix::identity(n, n)).amax() < 1e-12);
    }
}
