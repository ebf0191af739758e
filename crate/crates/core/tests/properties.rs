mod common;

use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use hyperminimal::bundles::FaceForm;
use hyperminimal::disk::{distance, Mobius};
use hyperminimal::germ::solve;
use hyperminimal::higgs::{build_from_germ, gauge_scale, g_lambda_weights, preserves_q_v, HiggsAssembly, C_STAR_WEIGHTS};
use hyperminimal::invariants::{frame_coefficients, frame_components, ricci_curvature};
use hyperminimal::moduli::*;

fn assembly() -> &'static HiggsAssembly {
    static ASM: OnceLock<HiggsAssembly> = OnceLock::new();
    ASM.get_or_init(|| {
        let b = common::bases(3, 0);
        let data = b.random(0.3, 0.2, 3);
        let sol = solve(&data, 1e-12, 30).unwrap();
        build_from_germ(&data, &sol).unwrap()
    })
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn nonzero() -> impl Strategy<Value = C64> {
    (0.1..5.0f64, -3.2..3.2f64).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn form(vals: Vec<C64>) -> FaceForm {
    FaceForm { m: -1, n: 1, values: vals }
}

fn max_dev(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn sup(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pointwise_normal_curvature_identity(a in complex(), b in complex(), s2 in 0.2..3.0f64) {
        let (a1, a2) = frame_coefficients(a, b);
        let (a_, b_) = frame_components(a1, a2);
        prop_assert!((a - a_).norm() < 1e-14 && (b - b_).norm() < 1e-14);
        // κ⊥² = ‖II‖⁴ - ‖U4‖² in the frame of length s
        let k = ricci_curvature(a1, a2, s2);
        let ii = 2.0 * (a.norm_sqr() + b.norm_sqr()) / (s2 * s2);
        let u4 = 4.0 * a.norm() * b.norm() / (s2 * s2);
        prop_assert!((k * k - (ii * ii - u4 * u4)).abs() <= 1e-10 * (1.0 + ii * ii));
    }

    #[test]
    fn gauge_scaling_round_trips(lambda in nonzero()) {
        let asm = assembly();
        let there = gauge_scale(asm, lambda).unwrap();
        let back = gauge_scale(&there, lambda.inv()).unwrap();
        prop_assert!(back.phi_isotropy() == C64::new(0.0, 0.0));
        for (x, y) in back.beta_blocks.iter().zip(&asm.beta_blocks) {
            prop_assert!(max_dev(&x.values, &y.values) <= 1e-12 * sup(&y.values));
        }
        for (x, y) in there.beta_blocks.iter().zip(&asm.beta_blocks) {
            let want: Vec<C64> = y.values.iter().map(|v| v / lambda).collect();
            prop_assert!(max_dev(&x.values, &want) <= 1e-12 * sup(&want));
        }
        prop_assert!((there.phi[0] - lambda).norm() <= 1e-15 * lambda.norm());
        prop_assert!(preserves_q_v(&there, &g_lambda_weights(&there)));
    }

    #[test]
    fn circle_action_lifts_to_an_orthogonal_gauge(a in nonzero()) {
        let asm = assembly();
        prop_assert!(preserves_q_v(asm, &C_STAR_WEIGHTS));
        let moved = asm.conjugate(a, &C_STAR_WEIGHTS).unwrap().normalized();
        moved.check_structure().unwrap();
        let b1: Vec<C64> = asm.beta_blocks[0].values.iter().map(|v| v * a).collect();
        let b2: Vec<C64> = asm.beta_blocks[1].values.iter().map(|v| v * a.inv()).collect();
        prop_assert_eq!(&moved.beta_blocks[0].values, &b1);
        prop_assert_eq!(&moved.beta_blocks[1].values, &b2);
        prop_assert_eq!(&moved.block_dbar, &asm.block_dbar);
        prop_assert_eq!(&moved.phi, &asm.phi);
    }

    #[test]
    fn normal_form_is_phase_invariant_and_scale_equivariant(
        v1 in proptest::collection::vec(complex(), 6),
        v2 in proptest::collection::vec(complex(), 6),
        t in -3.0..3.0f64,
        a in 0.2..5.0f64,
    ) {
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (n1, n2) = (norm(&v1), norm(&v2));
        prop_assume!(n1 > 1e-3 && n2 > 1e-3);
        let mut mags: Vec<f64> = v1.iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        prop_assume!(mags[5] - mags[4] > 1e-6);
        let base = orbit_normal_form(&form(v1.clone()), n1, &form(v2.clone()), n2, 0.0).unwrap();

        let e = C64::from_polar(1.0, t);
        let w1: Vec<C64> = v1.iter().map(|z| z * e).collect();
        let w2: Vec<C64> = v2.iter().map(|z| z / e).collect();
        let turned = orbit_normal_form(&form(w1), n1, &form(w2), n2, 0.0).unwrap();
        prop_assert!(max_dev(&turned.beta1.values, &base.beta1.values) < 1e-10);
        prop_assert!(max_dev(&turned.beta2.values, &base.beta2.values) < 1e-10);
        prop_assert!((turned.scale - base.scale).abs() < 1e-12 * base.scale);

        let s1: Vec<C64> = v1.iter().map(|z| z * a).collect();
        let s2: Vec<C64> = v2.iter().map(|z| z / a).collect();
        let scaled = orbit_normal_form(&form(s1), a * n1, &form(s2), n2 / a, 0.0).unwrap();
        prop_assert!((scaled.scale - base.scale / a).abs() < 1e-12 * base.scale / a);
        prop_assert!(max_dev(&scaled.beta1.values, &base.beta1.values) < 1e-10);
        prop_assert!((base.norms.0 - base.norms.1).abs() < 1e-12 * base.norms.0);
    }

    #[test]
    fn isometries_preserve_distance(p in complex(), z in complex(), w in complex()) {
        let shrink = |c: C64| if c.norm() >= 0.95 { c * (0.95 / c.norm()) } else { c };
        let (p, z, w) = (shrink(p), shrink(z), shrink(w));
        let m = Mobius::to_origin(p);
        let d0 = distance(z, w);
        let d1 = distance(m.apply(z), m.apply(w));
        prop_assert!((d0 - d1).abs() < 1e-8 * (1.0 + d0));
    }

    #[test]
    fn moduli_arithmetic_is_exact(g in 2usize..=10, k in 0i64..100) {
        let range = admissible_degrees(g);
        let span = (range.end() - range.start() + 1) as i64;
        prop_assert_eq!(span, 4 * g as i64 - 5);
        let l = range.start() + k % span;
        prop_assert_eq!(h1(g, l) + h1(g, -l), 6 * (g as i64 - 1));
        let flags = ClassFlags::rh4(ClassFlag::Nonzero, ClassFlag::Nonzero, false);
        let d = classify(g, 4, l, &flags).unwrap();
        prop_assert_eq!(d.dims.total_dim, 10 * (g as i64 - 1));
        prop_assert_eq!(d.dims.fiber_dim, Some(10 * g as i64 - 10));
        prop_assert_eq!(d.dims.components, Some(4 * g as i64 - 5));
        prop_assert_eq!(d.dims.h1, Some(h1(g, l)));
        prop_assert_eq!(d.w2 as i64, l.rem_euclid(2));
        prop_assert_ne!(d.verdict, Verdict::OutOfRange);
        let out = classify(g, 4, range.end() + 1 + k % 3, &flags).unwrap();
        prop_assert_eq!(out.verdict, Verdict::OutOfRange);
        if l >= 1 {
            let c = secant_genericity(g, l).unwrap();
            prop_assert_eq!(c.h0_k_lambda, h1(g, l));
            prop_assert_eq!(c.generic_ok, c.secant_dim < c.ambient_dim);
        }
    }
}

#[test]
fn vanishing_classes_never_create_stability() {
    use ClassFlag::*;
    let all = [Zero, Nonzero, Marginal];
    for g in 2..=10usize {
        for l in admissible_degrees(g) {
            for &b1 in &all {
                for &b2 in &all {
                    for prop in [false, true] {
                        let before = classify(g, 4, l, &ClassFlags::rh4(b1, b2, prop)).unwrap().verdict;
                        let zeroed = [
                            (if b1 == Nonzero { Zero } else { b1 }, b2),
                            (b1, if b2 == Nonzero { Zero } else { b2 }),
                        ];
                        for (c1, c2) in zeroed {
                            let after = classify(g, 4, l, &ClassFlags::rh4(c1, c2, prop)).unwrap().verdict;
                            assert!(after != Verdict::Stable || before == Verdict::Stable, "g={g} l={l} {b1:?} {b2:?}");
                        }
                    }
                }
            }
        }
        let before = classify(g, 3, 0, &ClassFlags::rh3(Nonzero)).unwrap().verdict;
        let after = classify(g, 3, 0, &ClassFlags::rh3(Zero)).unwrap().verdict;
        assert_eq!((before, after), (Verdict::Stable, Verdict::Polystable));
    }
}
