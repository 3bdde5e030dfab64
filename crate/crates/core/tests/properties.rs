//! Property tests for the invariants every module must keep.

mod common;

use common::*;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use proptest::prelude::*;
use zp_core::artifacts::check_relation;
use zp_core::complex::ComplexExt;
use zp_core::exactpoly::{mahler_height, resultant, IntPoly};
use zp_core::isogeny::{cyclic_sublattices, isogeny_witness};
use zp_core::kernel::{agm, eisenstein, j_invariant, poly_from_roots, polyroots, root_residual};
use zp_core::matrix::{IntMat2, Mat2};
use zp_core::modular::{phi_eval_numeric, phi_recover_exact, ModularPolynomial, RationalMap};
use zp_core::periods::{decompose_cm, detect_cm, full_period_matrix, Lattice};
use zp_core::polyrel::{not_in_i0, relation_polynomial, IdealI0};
use zp_core::relations::{dispatch_case, synthetic_first_way, synthetic_n4, synthetic_second_way, RelationInstance, SyntheticOptions};
use zp_core::scanner::{stratum_poly, unlikely_points, CurveModel, ScanOptions};
use zp_core::{Mp, PrecisionContext, Real};

fn ctx() -> PrecisionContext {
    PrecisionContext::new(128)
}

fn tau_strategy() -> impl Strategy<Value = (f64, f64)> {
    (-0.5f64..0.5, 0.87f64..2.0)
}

fn small_poly(max_deg: usize) -> impl Strategy<Value = IntPoly> {
    prop::collection::vec(-12i64..=12, 1..=max_deg + 1).prop_map(|mut c| {
        let last = c.len() - 1;
        if c[last] == 0 {
            c[last] = 1;
        }
        IntPoly::from_i64(&c)
    })
}

fn rel(a: &Complex<Mp>, b: &Complex<Mp>) -> f64 {
    (a.clone() - b.clone()).abs().to_f64() / (1.0 + a.abs().to_f64())
}

fn instance(kind: u8, seed: u64, opts: SyntheticOptions, ctx: &PrecisionContext) -> RelationInstance<Mp> {
    match kind {
        0 => synthetic_first_way(seed, opts, ctx),
        1 => synthetic_second_way(seed, opts, ctx),
        _ => synthetic_n4(seed, opts, ctx),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn agm_is_symmetric_and_homogeneous(a in 0.1f64..5.0, b in 0.1f64..5.0, ai in -0.3f64..0.3, lam in 0.2f64..4.0) {
        let ctx = ctx();
        let (x, y) = (c(&ctx, a, ai), c(&ctx, b, 0.0));
        let m = agm(&x, &y, &ctx).unwrap();
        prop_assert!(rel(&m, &agm(&y, &x, &ctx).unwrap()) < ctx.tol);
        let l = c(&ctx, lam, 0.0);
        let ml = agm(&(x * l.clone()), &(y * l.clone()), &ctx).unwrap();
        prop_assert!(rel(&(m * l), &ml) < ctx.tol);
    }

    #[test]
    fn polyroots_recovers_roots(roots in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..7)) {
        let ctx = ctx();
        let rs: Vec<_> = roots.iter().map(|&(a, b)| c(&ctx, a, b)).collect();
        let coeffs = poly_from_roots(&rs);
        let found = polyroots(&coeffs, &ctx).unwrap();
        prop_assert_eq!(found.len(), rs.len());
        prop_assert!(root_residual(&coeffs, &found) < 1e-20);
        // expanding the found roots gives back the coefficients
        let back = poly_from_roots(&found);
        let cmax = coeffs.iter().map(|z| z.abs().to_f64()).fold(1.0, f64::max);
        for (a, b) in coeffs.iter().zip(&back) {
            prop_assert!((a.clone() - b.clone()).abs().to_f64() < ctx.sqrt_tol() * coeffs.len() as f64 * cmax);
        }
    }

    #[test]
    fn cm_detection_is_translation_invariant(form in prop::sample::select(vec![(1i64, 0i64, 1i64), (1, 1, 1), (1, 0, 2), (2, 1, 3), (1, 1, 5), (3, 2, 5)]), k in -2i64..3) {
        // keep the translated form inside the search bound
        let ctx = ctx();
        let (a, b, cc) = form;
        let d = b * b - 4 * a * cc;
        let sq = ctx.lift::<Mp>(-d as f64).sqrt();
        let two_a = ctx.lift::<Mp>(2.0 * a as f64);
        let tau = Complex::new(ctx.lift::<Mp>((-b) as f64) / two_a.clone() + ctx.int::<Mp>(k), sq / two_a);
        let cert = detect_cm(&tau, 60, &ctx).expect("CM point");
        prop_assert_eq!(cert.disc, d);
    }

    #[test]
    fn isogeny_identity_and_duality((x, y) in tau_strategy(), m in 2i64..8, pick in 0usize..1000) {
        let ctx = ctx();
        let lat = Lattice::from_tau(c(&ctx, x, y), &ctx).unwrap();
        let subs = cyclic_sublattices(m);
        let run = isogeny_witness(&lat, &subs[pick % subs.len()], &ctx).unwrap();
        prop_assert!(run.check.passes(m, ctx.tol));
        prop_assert_eq!(run.witness.homology.det(), m);
        let d = run.witness.dual();
        prop_assert_eq!(&d.homology * &run.witness.homology, IntMat2::diag(m, m));
        let prod = &d.a_matrix() * &run.witness.a_matrix();
        let mm = c(&ctx, m as f64, 0.0);
        prop_assert!(prod.sub(&Mat2::diag(mm.clone(), mm)).max_norm().to_f64() < ctx.tol);
    }

    #[test]
    fn phi_numeric_matches_exact((x, y) in tau_strategy(), xr in -50.0f64..50.0, xi in -50.0f64..50.0, n in 2u32..4) {
        let ctx = ctx();
        let tau = c(&ctx, x, y);
        let phi = phi_recover_exact(n, &ctx).unwrap();
        let xv = c(&ctx, xr, xi);
        let yv = j_invariant(&tau, &ctx).unwrap();
        let exact = phi.eval_complex(&xv, &yv, &ctx);
        let num = phi_eval_numeric(n, &xv, &tau, &ctx).unwrap();
        let scale = phi.eval_scale(xv.abs().to_f64(), yv.abs().to_f64()).max(1.0);
        prop_assert!((exact - num).abs().to_f64() / scale < ctx.tol);
    }

    #[test]
    fn phi_exact_is_symmetric(p in -40i64..40, q in 1i64..6, r in -40i64..40, s in 1i64..6) {
        let ctx = ctx();
        let phi = phi_recover_exact(2, &ctx).unwrap();
        prop_assert!(phi.is_symmetric());
        let (x, y) = (BigRational::new(p.into(), q.into()), BigRational::new(r.into(), s.into()));
        prop_assert_eq!(phi.eval_exact(&x, &y), phi.eval_exact(&y, &x));
    }

    #[test]
    fn mahler_height_invariances(p in small_poly(5)) {
        prop_assume!(p.deg() >= 1 && !p.coeff(0).eq(&BigInt::from(0)));
        let ctx = ctx();
        let h = mahler_height(&p, &ctx).unwrap();
        let k = BigInt::from(7);
        prop_assert!((h - mahler_height(&p.scale(&k), &ctx).unwrap()).abs() < 1e-12);
        let minus: Vec<BigInt> = p.coeffs().iter().enumerate().map(|(i, c)| if i % 2 == 1 { -c } else { c.clone() }).collect();
        prop_assert!((h - mahler_height(&IntPoly::new(minus), &ctx).unwrap()).abs() < 1e-12);
        prop_assert!((h - mahler_height(&p.reflect(), &ctx).unwrap()).abs() < 1e-12);
        // Landau: M(p) ≤ ‖p‖₂
        let norm2: f64 = p.coeffs().iter().map(|c| { let f = c.to_string().parse::<f64>().unwrap(); f * f }).sum::<f64>().sqrt();
        prop_assert!(h * p.deg() as f64 <= norm2.ln() + 1e-12);
    }

    #[test]
    fn resultant_is_multiplicative(p in small_poly(4), q in small_poly(3), r in small_poly(3)) {
        prop_assert_eq!(resultant(&p, &q.mul(&r)), resultant(&p, &q) * resultant(&p, &r));
        prop_assert_eq!(resultant(&p, &q), sylvester_resultant(&p, &q));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn eisenstein_and_j_are_modular(x in -0.5f64..0.5, y in 0.5f64..2.0) {
        let ctx = ctx();
        let tau = c(&ctx, x, y);
        let s = -(c(&ctx, 1.0, 0.0) / tau.clone());
        let t = tau.clone() + c(&ctx, 1.0, 0.0);
        let e4 = eisenstein(4, &tau, &ctx).unwrap();
        let e6 = eisenstein(6, &tau, &ctx).unwrap();
        prop_assert!(rel(&e4, &eisenstein(4, &t, &ctx).unwrap()) < ctx.tol);
        prop_assert!(rel(&e6, &eisenstein(6, &t, &ctx).unwrap()) < ctx.tol);
        let t2 = tau.clone() * tau.clone();
        prop_assert!(rel(&(e4 * t2.clone() * t2.clone()), &eisenstein(4, &s, &ctx).unwrap()) < ctx.tol);
        prop_assert!(rel(&(e6 * t2.clone() * t2.clone() * t2), &eisenstein(6, &s, &ctx).unwrap()) < ctx.tol);
        let j = j_invariant(&tau, &ctx).unwrap();
        prop_assert!(rel(&j, &j_invariant(&s, &ctx).unwrap()) < ctx.tol);
        prop_assert!(rel(&j, &j_invariant(&t, &ctx).unwrap()) < ctx.tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cm_decomposition_round_trips((x, y) in tau_strategy(), wr in 0.3f64..2.0, wi in -1.0f64..1.0) {
        let ctx = ctx();
        let w1 = c(&ctx, wr, wi);
        let lat = Lattice::new(w1.clone(), w1 * c(&ctx, x, y)).unwrap();
        let pm = full_period_matrix(&lat, &ctx).unwrap();
        let sp = decompose_cm(&pm, &ctx).unwrap();
        let tpi = c(&ctx, 0.0, 2.0) * Complex::new(ctx.pi::<Mp>(), ctx.lift(0.0));
        let want = pm.p.map(|z| z.clone() / tpi.clone());
        prop_assert!(sp.reassemble(&ctx).sub(&want).max_norm().to_f64() < ctx.tol);
        prop_assert!((sp.h.get(0, 0).clone() - c(&ctx, 1.0, 0.0)).abs().to_f64() < ctx.tol);
        prop_assert!((sp.h.det() - c(&ctx, 1.0, 0.0)).abs().to_f64() < ctx.tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relation_verdicts_ignore_gauge(kind in 0u8..3, seed in 0u64..10_000) {
        let ctx = PrecisionContext::new(192);
        let plain = instance(kind, seed, SyntheticOptions::default(), &ctx);
        let gauged = instance(kind, seed, SyntheticOptions { random_gauge: true, allow_degenerate: true }, &ctx);
        let a = check_relation(&plain, 5, seed, &ctx).unwrap();
        let b = check_relation(&gauged, 5, seed, &ctx).unwrap();
        prop_assert!(a.dichotomy_holds && b.dichotomy_holds);
        prop_assert_eq!(a.case, b.case);
        prop_assert_eq!(a.holds, b.holds);
        prop_assert_eq!(&a.rhs_integers, &b.rhs_integers);
        for (x, y) in a.h.iter().zip(&b.h) {
            let hx: Complex<Mp> = zp_core::artifacts::c_in(x, 192).unwrap();
            let hy: Complex<Mp> = zp_core::artifacts::c_in(y, 192).unwrap();
            prop_assert!((hx - hy).abs().to_f64() < 1e-40);
        }
    }

    #[test]
    fn relation_polynomial_is_homogeneous_and_vanishes(kind in 0u8..3, seed in 0u64..10_000, scale in 0.01f64..100.0) {
        let ctx = PrecisionContext::new(192);
        let inst = instance(kind, seed, SyntheticOptions { random_gauge: true, allow_degenerate: true }, &ctx);
        let (_, w) = dispatch_case(&inst, &ctx).unwrap();
        let Ok(r) = relation_polynomial(&w, &inst.gauge, &ctx) else { return Ok(()) };
        let deg = r.homogeneous_degree();
        prop_assert!(matches!(deg, Some(2 | 4 | 8)), "degree {:?}", deg);
        let values = inst.values(&ctx).unwrap();
        let v = r.evaluate(&values).unwrap().abs().to_f64();
        prop_assert!(v < ctx.tol * r.eval_scale(&values).unwrap().max(1.0));
        // verdicts depend only on the relation up to scaling
        let ideal = IdealI0::new(inst.cm_coords());
        let plain = not_in_i0(&r, &ideal, 5, seed, &ctx).unwrap();
        let scaled = not_in_i0(&r.scale(&c(&ctx, scale, 0.0)), &ideal, 5, seed, &ctx).unwrap();
        prop_assert_eq!(plain.is_certificate(), scaled.is_certificate());
    }

    #[test]
    fn scan_points_are_exact_and_bounded(f in small_poly(2), g in small_poly(2), level in 1u32..3) {
        prop_assume!(f.deg() >= 1 && g.deg() >= 1 && f != g);
        let ctx = ctx();
        let curve = CurveModel::new(vec![RationalMap::polynomial(f), RationalMap::polynomial(g)], None, false).unwrap();
        let phi = if level == 1 { ModularPolynomial::level_one() } else { phi_recover_exact(level, &ctx).unwrap() };
        let strat = stratum_poly(&curve, (1, 2), &phi).unwrap();
        let report = unlikely_points(&curve, &ScanOptions::all(&curve, vec![level]), &ctx).unwrap();
        prop_assert!(report.points.len() <= strat.deg());
        for p in &report.points {
            let d = p.defining_poly().unwrap();
            prop_assert!(d.divides(&strat));
            prop_assert!(p.phi_residual < ctx.sqrt_tol());
        }
    }
}
